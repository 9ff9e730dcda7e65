"""
Model selection API endpoints: select, evaluate and generate
"""
from fastapi import APIRouter, File, Form, HTTPException, UploadFile
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel
from typing import Dict, List, Optional, Union
import logging

from app.config import config
from app.core.criteria import CriterionConfig
from app.core.experiment import describe_result, evaluate_model_spec, gen_synthetic
from app.core.chordal import format_notation
from app.core.schema import Dataset, parse_dataset, split
from app.core.search import SearchConfig, select_model
from app.utils import error_payload

router = APIRouter()
logger = logging.getLogger(__name__)


class GenerateRequest(BaseModel):
    model: str
    levels: Union[str, Dict[str, Union[int, List[str]]]]
    n: int
    seed: int = 0
    tables: Optional[Dict[str, List[float]]] = None
    class_column: Optional[str] = None


def _bad_request(e: Exception) -> HTTPException:
    logger.error(f"Rejected request: {e}")
    return HTTPException(400, error_payload(e))


def _read_upload(file: UploadFile, class_column: Optional[str], delimiter: Optional[str]) -> Dataset:
    text = file.file.read().decode("utf-8")
    return parse_dataset(text, class_column or config.class_column, delimiter or config.delimiter)


@router.post("/select")
def select_api(
    file: UploadFile = File(...),
    direction: str = Form("bss"),
    criterion: str = Form("bic"),
    alpha: Optional[float] = Form(None),
    mc_replicates: Optional[int] = Form(None),
    seed: Optional[int] = Form(None),
    split_fraction: Optional[str] = Form(None),
    literal_alpha_rule: bool = Form(False),
    dof_mode: Optional[str] = Form(None),
    class_column: Optional[str] = Form(None),
    delimiter: Optional[str] = Form(None),
):
    """Run one search; with ``split_fraction`` the trace carries test metrics"""
    try:
        dataset = _read_upload(file, class_column, delimiter)
        seed = config.seed if seed is None else seed
        criterion_config = CriterionConfig(
            kind=criterion,
            alpha=(config.alpha if alpha is None else alpha) if criterion in ("chi2", "exact") else None,
            mc_replicates=config.mc_replicates if mc_replicates is None else mc_replicates,
            seed=seed,
            literal_alpha_rule=literal_alpha_rule,
            dof_mode=dof_mode or config.dof_mode,
        )
        train, test = (dataset, None) if split_fraction is None else split(dataset, split_fraction, seed)
        result = select_model(train, SearchConfig(direction, criterion_config), test=test, workers=config.workers)
        return describe_result(result, train.schema)
    except ValueError as e:
        raise _bad_request(e)
    except Exception as e:
        logger.error(f"Selection failed: {e}", exc_info=True)
        raise HTTPException(500, error_payload(e))


@router.post("/evaluate")
def evaluate_api(
    file: UploadFile = File(...),
    model: str = Form("naive_bayes"),
    split_fraction: Optional[str] = Form(None),
    seed: Optional[int] = Form(None),
    class_column: Optional[str] = Form(None),
    delimiter: Optional[str] = Form(None),
):
    """Fit ``model`` (notation, ``naive_bayes`` or ``default``) on the training share and score the test share"""
    try:
        dataset = _read_upload(file, class_column, delimiter)
        train, test = split(dataset, split_fraction or config.split_fraction,
                            config.seed if seed is None else seed)
        metrics, notation, complexity = evaluate_model_spec(train, test, model)
        return {"model": notation, "complexity": complexity, "n_train": train.N, **metrics.to_dict()}
    except ValueError as e:
        raise _bad_request(e)
    except Exception as e:
        logger.error(f"Evaluation failed: {e}", exc_info=True)
        raise HTTPException(500, error_payload(e))


@router.post("/generate", response_class=PlainTextResponse)
def generate_api(request: GenerateRequest):
    """Sample a synthetic dataset; the generating model is echoed in a response header"""
    try:
        dataset, graph = gen_synthetic(request.model, request.levels, request.n, request.seed,
                                       tables=request.tables, class_column=request.class_column)
    except ValueError as e:
        raise _bad_request(e)
    schema = dataset.schema
    notation = format_notation(graph, schema.names, last=schema.class_var.name)
    return PlainTextResponse(dataset.to_text(config.delimiter), headers={"X-Generating-Model": notation})
