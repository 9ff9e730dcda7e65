"""
System management API endpoints
"""
from fastapi import APIRouter, HTTPException
import psutil
from datetime import datetime, timezone
import logging

import numpy
import scipy

from app.config import config
from app.api.tasks import ACTIVE, progress_data, task_lock

router = APIRouter()
logger = logging.getLogger(__name__)


@router.get("/config")
async def get_configuration():
    """Current search, data and server configuration"""
    return {
        "current": config.config,
        "split_fraction": str(config.split_fraction),
        "output_dir": str(config.output_dir),
    }


@router.get("/system/status")
async def system_status():
    """Get detailed system status"""
    try:
        mem = psutil.virtual_memory()
        process = psutil.Process()
        process_mem = process.memory_info()
        with task_lock:
            running = sum(1 for info in progress_data.values() if info["status"] in ACTIVE)

        return {
            "cpu": {
                "cores": psutil.cpu_count(),
                "load_average": psutil.getloadavg() if hasattr(psutil, 'getloadavg') else [0, 0, 0]
            },
            "memory": {
                "total_gb": round(mem.total / 1024**3, 2),
                "available_gb": round(mem.available / 1024**3, 2),
                "percent": mem.percent
            },
            "process": {
                "memory_mb": round(process_mem.rss / 1024**2, 2),
                "threads": process.num_threads()
            },
            "system": {
                "running_tasks": running,
                "workers": config.workers,
                "numpy_version": numpy.__version__,
                "scipy_version": scipy.__version__,
                "timestamp": datetime.now(timezone.utc).isoformat()
            }
        }
    except Exception as e:
        logger.error(f"Error getting system status: {e}")
        raise HTTPException(500, str(e))


@router.get("/health")
async def health_check():
    """System health check"""
    mem = psutil.virtual_memory()
    return {
        "status": "healthy",
        "app": config.app_name,
        "version": config.app_version,
        "memory_usage": f"{mem.percent}% ({round(mem.available / 1024**3, 1)}GB available)",
        "timestamp": datetime.now(timezone.utc).isoformat()
    }
