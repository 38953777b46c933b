"""Secondary breakdowns: pooled curves, per-benchmark Kendall, per-task asks and run counts."""

from collections import defaultdict
from collections.abc import Iterable, Mapping, Sequence

import pandas as pd

from ..trial.models import Protocol, TaskVariant, Trial, TrialStatus
from .frames import format_optional
from .metrics import (
    DEFAULT_TIMING_WINDOW,
    CellSummary,
    ask_stats,
    complete_unit_cells,
    first_ask_timing,
)
from .stats import EXACT_TAU_MAX_N, cross_model_tau_matrix

POOLED = "all"
TOTAL = "total"


def pooled_variants(variants: Mapping[str, TaskVariant]) -> dict[str, TaskVariant]:
    """Variants relabeled to the `all` benchmark, for curves pooled across benchmarks."""
    return {
        variant_id: variant.model_copy(update={"benchmark": POOLED})
        for variant_id, variant in variants.items()
    }


def pairwise_tau_table(
    cells: Sequence[CellSummary],
    variants: Mapping[str, TaskVariant],
    *,
    exact_max_n: int = EXACT_TAU_MAX_N,
) -> pd.DataFrame:
    """Kendall tau for every model pair, per benchmark and over all benchmarks.

    Each scope is computed twice: over every unit (`units=all`) and over complete units
    only (`units=complete`, see `complete_unit_cells`). Scopes with a single model have
    no pairs and are left out.
    """
    rows = []
    for unit_set, selected in (("all", list(cells)), ("complete", complete_unit_cells(cells))):
        by_scope: dict[str, list[CellSummary]] = defaultdict(list)
        for cell in selected:
            by_scope[variants[cell.variant_id].benchmark].append(cell)
        by_scope[POOLED] = selected
        for scope in sorted(by_scope):
            models = sorted({cell.model for cell in by_scope[scope]})
            if len(models) < 2:
                continue
            matrix = cross_model_tau_matrix(by_scope[scope], models, exact_max_n=exact_max_n)
            for position, model_a in enumerate(models):
                for model_b in models[position + 1 :]:
                    result = matrix.entries[model_a][model_b]
                    rows.append(
                        {
                            "scope": scope,
                            "units": unit_set,
                            "model_a": model_a,
                            "model_b": model_b,
                            "n_units": matrix.n_units[model_a][model_b],
                            "tau": result.statistic,
                            "p_value": result.p_value,
                        }
                    )
    columns = ["scope", "units", "model_a", "model_b", "n_units", "tau", "p_value"]
    return pd.DataFrame(rows, columns=columns).astype(
        {"n_units": int, "tau": float, "p_value": float}
    )


def _usable_sessions(sessions: Iterable[Trial]) -> list[Trial]:
    return [
        session
        for session in sessions
        if session.protocol is Protocol.NATURAL and session.status is not TrialStatus.FAILED
    ]


def ask_by_variant_table(
    sessions: Iterable[Trial], variants: Mapping[str, TaskVariant]
) -> pd.DataFrame:
    """Ask rate and mean first-ask timing per (model, variant); absent timings are `--`."""
    grouped: dict[tuple[str, str], list[Trial]] = defaultdict(list)
    for session in _usable_sessions(sessions):
        grouped[(session.model, session.variant_id)].append(session)
    rows = []
    for model, variant_id in sorted(grouped):
        summary = ask_stats(grouped[(model, variant_id)], model)
        rows.append(
            {
                "model": model,
                "variant_id": variant_id,
                "benchmark": variants[variant_id].benchmark,
                "sessions": summary.sessions,
                "ask_rate": summary.ask_rate,
                "total_calls": summary.total_calls,
                "mean_first_timing": format_optional(summary.mean_first_timing),
            }
        )
    columns = [
        "model",
        "variant_id",
        "benchmark",
        "sessions",
        "ask_rate",
        "total_calls",
        "mean_first_timing",
    ]
    return pd.DataFrame(rows, columns=columns).astype(
        {"sessions": int, "total_calls": int, "ask_rate": float}
    )


def ask_timings_table(
    sessions: Iterable[Trial], window: tuple[float, float] = DEFAULT_TIMING_WINDOW
) -> pd.DataFrame:
    """One row per asking session: the first ask's position, for timing histograms."""
    low, high = window
    rows = []
    for session in _usable_sessions(sessions):
        timing = first_ask_timing(session)
        if timing is None:
            continue
        rows.append(
            {
                "model": session.model,
                "variant_id": session.variant_id,
                "seed": session.seed,
                "first_ask_action": session.ask_events[0].action_index,
                "total_actions": session.total_actions,
                "timing": float(timing),
                "in_window": low <= float(timing) <= high,
            }
        )
    columns = [
        "model",
        "variant_id",
        "seed",
        "first_ask_action",
        "total_actions",
        "timing",
        "in_window",
    ]
    frame = pd.DataFrame(rows, columns=columns).astype(
        {
            "seed": int,
            "first_ask_action": int,
            "total_actions": int,
            "timing": float,
            "in_window": bool,
        }
    )
    return frame.sort_values(["model", "variant_id", "seed"], ignore_index=True)


def run_counts_table(trials: Iterable[Trial], variants: Mapping[str, TaskVariant]) -> pd.DataFrame:
    """Trials per benchmark and protocol, with a final `total` row.

    Every archived trial counts, whatever its status; the status columns split the
    total.
    """
    columns = [
        "forced_trials",
        "natural_sessions",
        "total_trials",
        "completed",
        "failed",
        "ungraded",
    ]
    counts: dict[str, dict[str, int]] = defaultdict(lambda: dict.fromkeys(columns, 0))
    for trial in trials:
        row = counts[variants[trial.variant_id].benchmark]
        row["forced_trials" if trial.protocol is Protocol.FORCED else "natural_sessions"] += 1
        row["total_trials"] += 1
        row[trial.status.value] += 1

    rows = [{"benchmark": benchmark, **counts[benchmark]} for benchmark in sorted(counts)]
    rows.append(
        {"benchmark": TOTAL, **{column: sum(row[column] for row in rows) for column in columns}}
    )
    return pd.DataFrame(rows, columns=["benchmark", *columns]).astype(
        {column: int for column in columns}
    )
