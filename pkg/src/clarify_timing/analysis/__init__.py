"""Metrics, significance tests and analysis tables (needs the `analysis` extra)."""

from importlib.util import find_spec

from ..exceptions.import_errors import PandasImportError, ScipyImportError

if not find_spec("pandas"):
    raise PandasImportError()
if not find_spec("scipy"):
    raise ScipyImportError()

from .frames import frame_columns, frame_error_finder, table_adapter
from .metrics import (
    AskSummary,
    CellSummary,
    ask_stats,
    cell_summaries,
    group_mean,
    pass_at_k,
    pass_at_k_exact,
    select_oracle_trace,
    wasted_compute,
)
from .stats import (
    PonrResult,
    StatResult,
    TauMatrix,
    cross_model_tau_matrix,
    kendall_tau,
    permutation_test,
    point_of_no_return,
    tau_b,
)
from .tables import AnalysisResult, AnalysisSettings, analyze_run, gap_lost

__all__ = [
    "AnalysisResult",
    "AnalysisSettings",
    "AskSummary",
    "CellSummary",
    "PonrResult",
    "StatResult",
    "TauMatrix",
    "analyze_run",
    "ask_stats",
    "cell_summaries",
    "cross_model_tau_matrix",
    "frame_columns",
    "frame_error_finder",
    "gap_lost",
    "group_mean",
    "kendall_tau",
    "pass_at_k",
    "pass_at_k_exact",
    "permutation_test",
    "point_of_no_return",
    "select_oracle_trace",
    "table_adapter",
    "tau_b",
    "wasted_compute",
]
