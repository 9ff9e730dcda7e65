from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.middleware.gzip import GZipMiddleware
from fastapi.responses import JSONResponse
import logging

from app.config import config
from app.api.models import router as models_router
from app.api.system import router as system_router
from app.api.tasks import router as tasks_router
from app.utils import ensure_directories, error_payload

# Setup logging
logging.basicConfig(
    level=logging.DEBUG if config.debug else logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

# Initialize FastAPI
app = FastAPI(
    title=config.app_name,
    version=config.app_version,
    description="Decomposable model selection for categorical classifiers"
)

# Add middleware
app.add_middleware(GZipMiddleware, minimum_size=1000)
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

ensure_directories(config.output_dir)

app.include_router(models_router, prefix="/api/models", tags=["models"])
app.include_router(system_router, prefix="/api", tags=["system"])
app.include_router(tasks_router, prefix="/api/tasks", tags=["tasks"])
logger.info("API routers loaded successfully")


# =================== ERROR HANDLING ===================

@app.exception_handler(ValueError)
async def value_error_handler(request: Request, exc: ValueError):
    logger.error(f"Rejected {request.url.path}: {exc}")
    return JSONResponse(status_code=400, content={"detail": error_payload(exc)})


@app.exception_handler(Exception)
async def unexpected_error_handler(request: Request, exc: Exception):
    logger.error(f"Unhandled error on {request.url.path}: {exc}", exc_info=True)
    return JSONResponse(status_code=500, content={"detail": error_payload(exc)})


@app.exception_handler(404)
async def not_found_exception_handler(request: Request, exc):
    return JSONResponse(status_code=404, content={"detail": getattr(exc, "detail", "API endpoint not found")})


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(app, host=config.server_host, port=config.server_port, log_level="info")
