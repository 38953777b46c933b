"""Command-line entry points: `run`, `analyze` and `report`."""

from .commands import cmd_analyze, cmd_report, cmd_run
from .config import RunConfig, TrialSelector, load_run_config, resolve_experiment
from .main import main

__all__ = [
    "RunConfig",
    "TrialSelector",
    "cmd_analyze",
    "cmd_report",
    "cmd_run",
    "load_run_config",
    "main",
    "resolve_experiment",
]
