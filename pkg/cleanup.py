#!/usr/bin/env python3
"""
Remove generated reports, traces and uploads
"""
import shutil
from pathlib import Path
import logging

from app.config import config

logger = logging.getLogger(__name__)


def clean_outputs(output_dir: Path = None) -> int:
    """Delete everything under the output directory; returns the number of entries removed"""
    output_dir = Path(output_dir or config.output_dir)
    removed = 0
    if not output_dir.exists():
        return removed
    for item in output_dir.iterdir():
        try:
            if item.is_dir():
                shutil.rmtree(item)
            else:
                item.unlink()
            removed += 1
            logger.info(f"🗑️ Deleted: {item}")
        except OSError as e:
            logger.warning(f"Could not delete {item}: {e}")
    logger.info(f"✅ {output_dir} cleaned")
    return removed


def clean_all():
    """Clean everything"""
    clean_outputs()

    # Clean __pycache__
    for pycache in Path(".").rglob("__pycache__"):
        try:
            shutil.rmtree(pycache)
            logger.info(f"🗑️ Deleted: {pycache}")
        except OSError:
            pass

    logger.info("✨ Everything cleaned and ready for fresh start!")


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO)
    clean_all()
