"""Column and dtype contracts for the analysis tables."""

import math
from collections.abc import Hashable
from typing import Annotated, Any, Literal, TypeAlias

import numpy as np
import pandas as pd
from pydantic import ConfigDict, TypeAdapter

from ..decorators import invariant_checker, invariant_validator
from ..pydantic_adapters import harness_type_adapter

NumpyDType: TypeAlias = type[np.generic] | np.dtype[Any]
ColumnRule: TypeAlias = NumpyDType | set[NumpyDType] | Literal["any"]
OtherColumns: TypeAlias = ColumnRule | Literal["forbid"]

FRAME_CONFIG = ConfigDict(arbitrary_types_allowed=True)


def _as_dtype_set(rule: OtherColumns) -> set[Any]:
    rules = rule if isinstance(rule, set) else {rule}
    return {np.dtype(item).type if isinstance(item, np.dtype) else item for item in rules}


def _compatible(value_dtype: Any, required: set[Any]) -> bool:
    """`np.issubdtype` against each allowed type; object columns only match `np.object_`."""
    return any(np.issubdtype(value_dtype, dtype) for dtype in required)


def frame_error_finder(
    data: pd.DataFrame,
    *,
    column_map: dict[Hashable, ColumnRule],
    other_columns: OtherColumns = "forbid",
    allow_empty: bool = True,
) -> list[str]:
    """Checks that a table has the expected columns and column dtypes.

    `other_columns` governs columns outside `column_map`: `"forbid"` rejects them, `"any"`
    accepts them, and a dtype (or set of dtypes) requires that type. Numeric rules use
    `np.issubdtype`, so `np.floating` accepts `float64` and `np.number` accepts both ints
    and floats.

    Args:
        data (pd.DataFrame): Table to check.
        column_map (dict[Hashable, ColumnRule]): Required columns and their dtypes.
        other_columns (OtherColumns, optional): Rule for extra columns. Defaults to "forbid".
        allow_empty (bool, optional): If False, a table without rows is a violation.

    Returns:
        list[str]: Violations; empty when the table matches.
    """
    violations = []
    columns = [str(column) for column in data.columns]
    required = {str(column): _as_dtype_set(rule) for column, rule in column_map.items()}

    missing = [column for column in required if column not in columns]
    extra = [column for column in columns if column not in required]
    if missing:
        violations.append(f"Required column(s) don't exist: {missing}.")
    if other_columns == "forbid" and extra:
        violations.append(f"Extra column(s) found: {extra}.")
    elif other_columns != "any":
        required |= {column: _as_dtype_set(other_columns) for column in extra}
    if not allow_empty and data.empty:
        violations.append("Table has no rows.")

    for column, dtypes in required.items():
        if "any" in dtypes or column not in columns:
            continue
        value_dtype = data[column].dtype
        if not _compatible(value_dtype, dtypes):
            names = sorted(getattr(dtype, "__name__", str(dtype)) for dtype in dtypes)
            violations.append(f"Column `{column}` of type `{value_dtype}` is not one of {names}.")
    return violations


frame_checker = invariant_checker("analysis_table_error", frame_error_finder)
frame_columns = invariant_validator(frame_checker)
"""Validates an analysis table's columns and dtypes inside an `Annotated` type.

Usage:
    ```python
    Ponr: TypeAlias = Annotated[
        pd.DataFrame,
        frame_columns(column_map={"dimension": np.object_}, other_columns=np.object_),
    ]
    ponr_adapter = table_adapter(Ponr)
    ```

Returns:
    AfterValidator: A pydantic [`AfterValidator`](https://docs.pydantic.dev/latest/concepts/validators/#annotated-validators).
"""  # noqa: E501


def table_adapter(table_type: Any) -> TypeAdapter:
    """`TypeAdapter` for an annotated `pd.DataFrame` type."""
    return harness_type_adapter(table_type, config=FRAME_CONFIG)


ABSENT = "--"
FLOAT_FORMAT = "%.6f"


def format_optional(value: float | None) -> str:
    """Fixed-format float, or `--` for a missing or NaN value."""
    if value is None or math.isnan(value):
        return ABSENT
    return FLOAT_FORMAT % value


TEXT = np.object_
NUMBER = np.number

VoiCurves: TypeAlias = Annotated[
    pd.DataFrame,
    frame_columns(column_map={"benchmark": TEXT, "dimension": TEXT}, other_columns=NUMBER),
]
WastedCompute: TypeAlias = Annotated[
    pd.DataFrame,
    frame_columns(
        column_map={"benchmark": TEXT, "unit": TEXT, "reported": np.bool_},
        other_columns=NUMBER,
    ),
]
TauTable: TypeAlias = Annotated[
    pd.DataFrame,
    frame_columns(column_map={"model": TEXT}, other_columns=NUMBER),
]
PonrGrid: TypeAlias = Annotated[
    pd.DataFrame,
    frame_columns(column_map={"dimension": TEXT}, other_columns=TEXT),
]
AskTable: TypeAlias = Annotated[
    pd.DataFrame,
    frame_columns(
        column_map={
            "model": TEXT,
            "sessions": np.integer,
            "ask_rate": NUMBER,
            "total_calls": np.integer,
            "calls_per_asking_session": NUMBER,
            "mean_first_timing": "any",
            "median_first_timing": "any",
            "window_share": "any",
        }
    ),
]
PlotSeries: TypeAlias = Annotated[
    pd.DataFrame,
    frame_columns(
        column_map={
            "benchmark": TEXT,
            "dimension": TEXT,
            "series": TEXT,
            "x": NUMBER,
            "y": NUMBER,
        }
    ),
]
Findings: TypeAlias = Annotated[
    pd.DataFrame,
    frame_columns(column_map={"finding": TEXT, "scope": TEXT, "value": TEXT}),
]

voi_curves_adapter = table_adapter(VoiCurves)
wasted_compute_adapter = table_adapter(WastedCompute)
tau_table_adapter = table_adapter(TauTable)
ponr_grid_adapter = table_adapter(PonrGrid)
ask_table_adapter = table_adapter(AskTable)
plot_series_adapter = table_adapter(PlotSeries)
findings_adapter = table_adapter(Findings)

PairwiseTau: TypeAlias = Annotated[
    pd.DataFrame,
    frame_columns(
        column_map={
            "scope": TEXT,
            "units": TEXT,
            "model_a": TEXT,
            "model_b": TEXT,
            "n_units": np.integer,
            "tau": NUMBER,
            "p_value": NUMBER,
        }
    ),
]
AskByVariant: TypeAlias = Annotated[
    pd.DataFrame,
    frame_columns(
        column_map={
            "model": TEXT,
            "variant_id": TEXT,
            "benchmark": TEXT,
            "sessions": np.integer,
            "ask_rate": NUMBER,
            "total_calls": np.integer,
            "mean_first_timing": "any",
        }
    ),
]
AskTimings: TypeAlias = Annotated[
    pd.DataFrame,
    frame_columns(
        column_map={
            "model": TEXT,
            "variant_id": TEXT,
            "seed": np.integer,
            "first_ask_action": np.integer,
            "total_actions": np.integer,
            "timing": NUMBER,
            "in_window": np.bool_,
        }
    ),
]
RunCounts: TypeAlias = Annotated[
    pd.DataFrame,
    frame_columns(column_map={"benchmark": TEXT}, other_columns=np.integer),
]

pairwise_tau_adapter = table_adapter(PairwiseTau)
ask_by_variant_adapter = table_adapter(AskByVariant)
ask_timings_adapter = table_adapter(AskTimings)
run_counts_adapter = table_adapter(RunCounts)
