"""
Utility functions shared by the CLI, reports and the API
"""
import logging
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

logger = logging.getLogger(__name__)


def format_file_size(size_in_bytes):
    """Format file size in human readable format"""
    if size_in_bytes < 1024:
        return f"{size_in_bytes} B"
    elif size_in_bytes < 1024 * 1024:
        return f"{size_in_bytes / 1024:.1f} KB"
    elif size_in_bytes < 1024 * 1024 * 1024:
        return f"{size_in_bytes / (1024 * 1024):.1f} MB"
    else:
        return f"{size_in_bytes / (1024 * 1024 * 1024):.1f} GB"


def format_fraction(value: Optional[float]) -> str:
    """Accuracy-style rendering without the leading zero: 0.7418 -> .7418"""
    if value is None:
        return ""
    text = f"{value:.4f}"
    return text[1:] if text.startswith("0.") else text


def format_cell(accuracy: float, complexity: Optional[Union[int, float]]) -> str:
    """'.7418 (21)', or just the accuracy when there is no model; averaged
    complexities keep one decimal"""
    if complexity is None:
        return format_fraction(accuracy)
    if isinstance(complexity, float):
        return f"{format_fraction(accuracy)} ({complexity:.1f})"
    return f"{format_fraction(accuracy)} ({complexity})"


def format_value(value: Optional[float]) -> str:
    """Fixed-width scientific notation for criterion values; empty for None"""
    return "" if value is None else f"{value:.6e}"


def format_edge(edge: Optional[Tuple[int, int]], names: Sequence[str]) -> str:
    if edge is None:
        return ""
    i, j = edge
    return f"{names[i]}-{names[j]}"


def render_table(rows: Sequence[Sequence[str]]) -> str:
    """Left-aligned columns separated by two spaces"""
    if not rows:
        return ""
    widths = [max(len(row[c]) for row in rows if c < len(row)) for c in range(max(map(len, rows)))]
    lines = ["  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)).rstrip() for row in rows]
    return "\n".join(lines)


def sanitize_filename(filename: str) -> str:
    """Sanitize filename to prevent path traversal"""
    return "".join(c for c in filename if c.isalnum() or c in ('.', '-', '_')).rstrip()


def ensure_directories(*directories: Path):
    """Ensure all required directories exist"""
    for directory in directories:
        Path(directory).mkdir(parents=True, exist_ok=True)
    return True


def error_payload(error: Exception) -> dict:
    """Machine-readable error record shared by the CLI error line and API responses"""
    return {
        "error": type(error).__name__,
        "message": str(error),
        "line": getattr(error, "line", None),
        "cell": getattr(error, "cell", None),
    }
