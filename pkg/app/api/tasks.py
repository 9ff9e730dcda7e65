"""
Background task management API endpoints
"""
from fastapi import APIRouter, BackgroundTasks, File, Form, HTTPException, UploadFile
import threading
import time
import shutil
from datetime import datetime, timezone
import logging
from pathlib import Path
from typing import List, Optional, Tuple

from app.config import config
from app.core.experiment import run_experiment
from app.utils import ensure_directories, error_payload, format_file_size, sanitize_filename

router = APIRouter()
logger = logging.getLogger(__name__)

# Task records keyed by task id, guarded by task_lock
progress_data = {}
task_lock = threading.Lock()

ACTIVE = ("pending", "running")
FINISHED = ("completed", "failed", "cancelled")
LOG_LIMIT = 100
RECENT_LIMIT = 10


class TaskCancelled(Exception):
    """Raised inside a worker once its task was cancelled"""


def _now() -> datetime:
    return datetime.now(timezone.utc)


def update_task_progress(task_id: str, progress: int, message: str, status: str = "running",
                         cells: Optional[Tuple[int, int]] = None):
    """Record progress for a task, creating its record on first use"""
    with task_lock:
        task = progress_data.setdefault(task_id, {
            "task_id": task_id,
            "progress": 0,
            "message": "",
            "status": "pending",
            "start_time": _now().isoformat(),
            "logs": [],
        })
        task.update(progress=progress, message=message, status=status)
        if cells is not None:
            task["cells_done"], task["cells_total"] = cells
        if status in FINISHED:
            finished = _now()
            task["end_time"] = finished.isoformat()
            task["duration"] = (finished - datetime.fromisoformat(task["start_time"])).total_seconds()
        task["logs"] = (task["logs"] + [f"[{datetime.now():%H:%M:%S}] {message}"])[-LOG_LIMIT:]


def _is_cancelled(task_id: str) -> bool:
    with task_lock:
        return progress_data.get(task_id, {}).get("status") == "cancelled"


def experiment_task(task_id: str, paths: List[Path], class_column: str, split_fraction: str, seed: int,
                    alphas: List[float], mc_replicates: int, literal_alpha_rule: bool, dof_mode: str):
    """Background task running the full experiment matrix"""

    def progress(done: int, total: int, message: str):
        if _is_cancelled(task_id):
            raise TaskCancelled(task_id)
        update_task_progress(task_id, int(100 * done / total), message, cells=(done, total))

    if _is_cancelled(task_id):
        return
    try:
        update_task_progress(task_id, 0, f"Starting experiment on {len(paths)} dataset(s)...")
        report = run_experiment(
            paths, class_column, split_fraction=split_fraction, seed=seed, alphas=alphas,
            mc_replicates=mc_replicates, delimiter=config.delimiter, literal_alpha_rule=literal_alpha_rule,
            dof_mode=dof_mode, workers=config.workers, progress=progress,
        )
        with task_lock:
            progress_data[task_id]["result"] = report.to_dict()
            progress_data[task_id]["report_text"] = report.to_text()
        update_task_progress(task_id, 100, "Experiment complete", "completed")
    except TaskCancelled:
        logger.info(f"Experiment task {task_id} cancelled")
    except Exception as e:
        logger.error(f"Experiment task failed: {e}")
        with task_lock:
            progress_data[task_id]["error"] = error_payload(e)
        update_task_progress(task_id, 0, f"Experiment failed: {str(e)}", "failed")


@router.post("/start/experiment")
async def start_experiment_api(
    background_tasks: BackgroundTasks,
    files: List[UploadFile] = File(...),
    class_column: Optional[str] = Form(None),
    split_fraction: Optional[str] = Form(None),
    seed: Optional[int] = Form(None),
    alphas: Optional[str] = Form(None),
    mc_replicates: Optional[int] = Form(None),
    literal_alpha_rule: bool = Form(False),
    dof_mode: Optional[str] = Form(None),
):
    """Upload one file per dataset and run the experiment in the background"""
    try:
        parsed_alphas = [float(a) for a in alphas.split(",")] if alphas else config.alphas
    except ValueError as e:
        raise HTTPException(400, error_payload(e))

    task_id = f"experiment_{time.time_ns()}"
    upload_dir = config.output_dir / "uploads" / task_id
    ensure_directories(upload_dir)
    paths = []
    for file in files:
        path = upload_dir / (sanitize_filename(file.filename or "") or f"dataset_{len(paths)}.csv")
        with open(path, "wb") as buffer:
            shutil.copyfileobj(file.file, buffer)
        logger.info(f"📥 Stored {path.name} ({format_file_size(path.stat().st_size)})")
        paths.append(path)

    update_task_progress(task_id, 0, "Queued", "pending")
    background_tasks.add_task(
        experiment_task, task_id, paths,
        class_column or config.class_column,
        split_fraction or str(config.split_fraction),
        config.seed if seed is None else seed,
        parsed_alphas,
        config.mc_replicates if mc_replicates is None else mc_replicates,
        literal_alpha_rule,
        dof_mode or config.dof_mode,
    )
    return {
        "task_id": task_id,
        "message": f"Started experiment on {len(paths)} dataset(s)",
        "status": "started",
        "monitor_url": f"/api/tasks/progress/{task_id}"
    }


@router.get("/progress/{task_id}")
async def get_task_progress(task_id: str):
    """Progress of one experiment task, with a time estimate while it runs"""
    with task_lock:
        if task_id not in progress_data:
            raise HTTPException(404, f"Task {task_id} not found")
        task = dict(progress_data[task_id])

    if task["status"] == "running" and task["progress"] > 0:
        elapsed = (_now() - datetime.fromisoformat(task["start_time"])).total_seconds()
        task["elapsed_seconds"] = int(elapsed)
        task["estimated_remaining_seconds"] = max(0, int(elapsed * (100 / task["progress"] - 1)))
    return task


def _summary(task: dict) -> dict:
    keys = ("task_id", "progress", "message", "status", "start_time", "end_time", "duration",
            "cells_done", "cells_total")
    return {key: task[key] for key in keys if key in task}


@router.get("/active")
async def get_active_tasks():
    """Running experiments plus the most recently finished ones"""
    with task_lock:
        tasks = list(progress_data.values())
    return {
        "active": [_summary(t) for t in tasks if t["status"] in ACTIVE],
        "recent": [_summary(t) for t in tasks if t["status"] in FINISHED][-RECENT_LIMIT:],
        "total_tasks": len(tasks),
    }


@router.delete("/{task_id}")
async def cancel_task(task_id: str):
    """Cancel a running task; the worker stops at its next cell"""
    with task_lock:
        if task_id not in progress_data:
            raise HTTPException(404, f"Task {task_id} not found")
        if progress_data[task_id]["status"] not in ACTIVE:
            return {"status": "not_running", "task_id": task_id}
        current = progress_data[task_id]["progress"]
    update_task_progress(task_id, current, "Task cancelled by user", "cancelled")
    return {"status": "cancelled", "task_id": task_id}
