"""
API routes for decomposable model selection
"""
from . import models, system, tasks

__all__ = ["models", "system", "tasks"]
