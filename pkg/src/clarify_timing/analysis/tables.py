"""Analysis artifacts for one run directory: CSV tables, plot series and metadata."""

import json
import logging
import math
from collections import defaultdict
from collections.abc import Mapping, Sequence
from decimal import Decimal
from pathlib import Path
from statistics import mean

import pandas as pd
from pydantic import Field, TypeAdapter

from ..conditions import ALL_CONDITIONS, INJECTION_FRACTIONS, AmbiguityClass, Condition, Dimension
from ..exceptions import ArchiveError, ArchiveMissingError
from ..pydantic_adapters import HarnessModel
from ..trial.archive import (
    MANIFEST_FILE,
    VARIANTS_FILE,
    TrialFilter,
    accept_all,
    load_manifest,
    load_trials,
    load_variants,
)
from ..trial.models import Protocol, TaskVariant, Trial, TrialStatus
from .breakdowns import (
    ask_by_variant_table,
    ask_timings_table,
    pairwise_tau_table,
    pooled_variants,
    run_counts_table,
)
from .frames import (
    ABSENT,
    FLOAT_FORMAT,
    ask_by_variant_adapter,
    ask_table_adapter,
    ask_timings_adapter,
    findings_adapter,
    format_optional,
    pairwise_tau_adapter,
    plot_series_adapter,
    ponr_grid_adapter,
    run_counts_adapter,
    tau_table_adapter,
    voi_curves_adapter,
    wasted_compute_adapter,
)
from .metrics import (
    DEFAULT_K,
    DEFAULT_TIMING_WINDOW,
    AskSummary,
    CellSummary,
    ask_stats,
    cell_summaries,
    complete_unit_cells,
    complete_units,
    group_mean,
    select_oracle_trace,
    wasted_compute,
)
from .stats import DEFAULT_ALPHA, DEFAULT_PERMUTATIONS, cross_model_tau_matrix, point_of_no_return

logger = logging.getLogger(__name__)

ANALYSIS_DIR = "analysis"
VOI_CURVES_FILE = "voi_curves.csv"
WASTED_COMPUTE_FILE = "wasted_compute.csv"
KENDALL_MATRIX_FILE = "kendall_matrix.csv"
KENDALL_PVALUES_FILE = "kendall_pvalues.csv"
PONR_FILE = "ponr.csv"
PONR_TESTS_FILE = "ponr_tests.csv"
ASK_SUMMARY_FILE = "ask_summary.csv"
VOI_PLOT_FILE = "voi_plot.csv"
VOI_COMPLETE_FILE = "voi_curves_complete.csv"
VOI_POOLED_FILE = "voi_curves_pooled.csv"
KENDALL_PAIRS_FILE = "kendall_by_benchmark.csv"
ASK_BY_VARIANT_FILE = "ask_by_variant.csv"
ASK_TIMINGS_FILE = "ask_timings.csv"
ASK_OVERLAY_FILE = "natural_ask_overlay.csv"
RUN_COUNTS_FILE = "run_counts.csv"
NATURAL_ONLY_FILES = (ASK_SUMMARY_FILE, ASK_BY_VARIANT_FILE, ASK_TIMINGS_FILE, ASK_OVERLAY_FILE)
FINDINGS_FILE = "findings.csv"
META_FILE = "analysis_meta.json"
CONDITION_LABELS = [condition.label for condition in ALL_CONDITIONS]
INJECTION_LABELS = [Condition.injection(fraction).label for fraction in INJECTION_FRACTIONS]


class AnalysisSettings(HarnessModel):
    """Knobs of the analysis step; `stats_seed` falls back to the run manifest's."""

    k: int = Field(default=DEFAULT_K, gt=0)
    n_perm: int = Field(default=DEFAULT_PERMUTATIONS, gt=0)
    alpha: float = Field(default=DEFAULT_ALPHA, gt=0.0, lt=1.0)
    stats_seed: int | None = None
    ask_window: tuple[float, float] = DEFAULT_TIMING_WINDOW
    optimal_window_tolerance: float = Field(default=0.05, ge=0.0)
    absolute_unit_benchmarks: list[str] = ["swe"]
    """Benchmarks (case-insensitive substrings) whose wasted compute is reported in actions."""


class AnalysisResult(HarnessModel):
    out_dir: Path
    files: dict[str, Path]
    excluded_strata: list[str] = []


def _write_csv(frame: pd.DataFrame, path: Path, adapter: TypeAdapter | None = None) -> Path:
    if adapter is not None:
        adapter.validate_python(frame)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def voi_curves_table(
    cells: Sequence[CellSummary], variants: Mapping[str, TaskVariant]
) -> pd.DataFrame:
    """Mean pass@k per (benchmark, dimension) and condition, with the cell count behind each."""
    means = group_mean(cells, ["benchmark", "dimension", "condition"], variants)
    rows: dict[tuple[str, str], dict[str, object]] = {}
    for entry in means.itertuples(index=False):
        row = rows.setdefault(
            (entry.benchmark, entry.dimension),
            {"benchmark": entry.benchmark, "dimension": entry.dimension},
        )
        label = Condition.from_key(entry.condition).label
        row[label] = float(entry.mean)
        row[f"n_{label}"] = int(entry.n_units)

    n_columns = [f"n_{label}" for label in CONDITION_LABELS]
    columns = ["benchmark", "dimension", *CONDITION_LABELS, *n_columns]
    frame = pd.DataFrame([rows[key] for key in sorted(rows)], columns=columns)
    frame[n_columns] = frame[n_columns].fillna(0)
    return frame.astype(
        {**{label: float for label in CONDITION_LABELS}, **{column: int for column in n_columns}}
    )


def _reports_absolute(benchmark: str, settings: AnalysisSettings) -> bool:
    return any(marker.lower() in benchmark.lower() for marker in settings.absolute_unit_benchmarks)


def wasted_compute_table(
    trials: Sequence[Trial], variants: Mapping[str, TaskVariant], settings: AnalysisSettings
) -> pd.DataFrame:
    """Mean wasted compute per benchmark and injection fraction, in both units.

    Each (variant, model, condition) cell is averaged first, then cells are averaged
    per benchmark. Injection trials whose (variant, model) has no terminated oracle
    trial are left out.
    """
    oracle_runs: dict[tuple[str, str], list[Trial]] = defaultdict(list)
    for trial in trials:
        if trial.condition == Condition.oracle():
            oracle_runs[(trial.variant_id, trial.model)].append(trial)
    traces = {key: select_oracle_trace(runs) for key, runs in oracle_runs.items()}

    per_cell: dict[tuple[str, str, str, str], list[float]] = defaultdict(list)
    for trial in trials:
        if not trial.condition.is_injection or trial.status is TrialStatus.FAILED:
            continue
        trace = traces.get((trial.variant_id, trial.model))
        if trace is None:
            continue
        for unit in ("fraction", "absolute"):
            key = (unit, trial.variant_id, trial.model, trial.condition.label)
            per_cell[key].append(wasted_compute(trial, trace, unit))

    per_benchmark: dict[tuple[str, str, str], list[float]] = defaultdict(list)
    for (unit, variant_id, _model, label), values in per_cell.items():
        per_benchmark[(variants[variant_id].benchmark, unit, label)].append(mean(values))

    rows: dict[tuple[str, str], dict[str, object]] = {}
    for (benchmark, unit, label), values in per_benchmark.items():
        row = rows.setdefault(
            (benchmark, unit),
            {
                "benchmark": benchmark,
                "unit": unit,
                "reported": (unit == "absolute") == _reports_absolute(benchmark, settings),
            },
        )
        row[label] = mean(values)
    frame = pd.DataFrame(
        [rows[key] for key in sorted(rows)],
        columns=["benchmark", "unit", "reported", *INJECTION_LABELS],
    )
    return frame.astype({"reported": bool, **{label: float for label in INJECTION_LABELS}})


def kendall_tables(cells: Sequence[CellSummary]) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Cross-model tau statistics and p-values; a single model yields its diagonal only."""
    models = sorted({cell.model for cell in cells})
    if len(models) >= 2:
        matrix = cross_model_tau_matrix(cells, models)
        statistics, p_values = matrix.frame("statistic"), matrix.frame("p_value")
    else:
        statistics = pd.DataFrame(1.0, index=models, columns=models)
        p_values = pd.DataFrame(1.0, index=models, columns=models)
    frames = []
    for frame in (statistics, p_values):
        frame = frame.astype(float)
        frame.index.name = "model"
        frames.append(frame.reset_index())
    return frames[0], frames[1]


def ponr_tables(
    cells: Sequence[CellSummary],
    variants: Mapping[str, TaskVariant],
    settings: AnalysisSettings,
    seed: int,
) -> tuple[pd.DataFrame, pd.DataFrame, list[str]]:
    """Point of no return per (dimension, ambiguity class).

    Returns:
        tuple: The `--`-filled grid, the per-fraction tests, and the excluded strata.
    """
    strata: dict[tuple[Dimension, AmbiguityClass], dict[str, list[float]]] = defaultdict(
        lambda: defaultdict(list)
    )
    for cell in cells:
        if cell.pass_at_k is None:
            continue
        variant = variants[cell.variant_id]
        stratum = strata[(variant.primary_dimension, variant.ambiguity_class)]
        stratum[cell.condition.key].append(cell.pass_at_k)

    present = {dimension for dimension, _ in strata}
    dimensions = [dimension for dimension in Dimension if dimension in present]
    grid = {dimension: dict.fromkeys(AmbiguityClass, ABSENT) for dimension in dimensions}
    tests = []
    excluded = []
    nc_key = Condition.no_clarification().key
    for (dimension, ambiguity), by_condition in sorted(
        strata.items(), key=lambda item: (item[0][0].value, item[0][1].value)
    ):
        injection_keys = [Condition.injection(fraction).key for fraction in INJECTION_FRACTIONS]
        if not by_condition.get(nc_key) or not all(by_condition.get(key) for key in injection_keys):
            excluded.append(f"{dimension.value}/{ambiguity.value}")
            logger.warning(
                "PONR stratum %s/%s lacks NC or injection cells; reported as %s",
                dimension.value,
                ambiguity.value,
                ABSENT,
            )
            continue
        result = point_of_no_return(
            {
                fraction: by_condition[key]
                for fraction, key in zip(INJECTION_FRACTIONS, injection_keys, strict=True)
            },
            by_condition[nc_key],
            settings.alpha,
            n_perm=settings.n_perm,
            seed=seed,
            stream=f"{dimension.value}/{ambiguity.value}:",
        )
        grid[dimension][ambiguity] = result.label
        for fraction, test in result.results.items():
            tests.append(
                {
                    "dimension": dimension.value,
                    "ambiguity_class": ambiguity.value,
                    "fraction": float(Decimal(fraction)),
                    "statistic": test.statistic,
                    "p_value": test.p_value,
                    "threshold": result.threshold,
                    "significant": test.p_value < result.threshold,
                }
            )

    grid_frame = pd.DataFrame(
        [
            {
                "dimension": dimension.value,
                **{cls.value: grid[dimension][cls] for cls in AmbiguityClass},
            }
            for dimension in dimensions
        ],
        columns=["dimension", *(cls.value for cls in AmbiguityClass)],
    ).astype(object)
    tests_frame = pd.DataFrame(
        tests,
        columns=[
            "dimension",
            "ambiguity_class",
            "fraction",
            "statistic",
            "p_value",
            "threshold",
            "significant",
        ],
    )
    return grid_frame, tests_frame, excluded


def model_ask_summaries(
    sessions: Sequence[Trial], settings: AnalysisSettings
) -> list[AskSummary]:
    """`ask_stats` of every model, in model order."""
    by_model: dict[str, list[Trial]] = defaultdict(list)
    for session in sessions:
        by_model[session.model].append(session)
    return [
        ask_stats(by_model[model], model, window=settings.ask_window) for model in sorted(by_model)
    ]


def ask_summary_table(summaries: Sequence[AskSummary]) -> pd.DataFrame:
    """One natural-ask row per model; absent timings are written as `--`."""
    rows = []
    for summary in summaries:
        rows.append(
            {
                "model": summary.model,
                "sessions": summary.sessions,
                "ask_rate": summary.ask_rate,
                "total_calls": summary.total_calls,
                "calls_per_asking_session": summary.calls_per_asking_session,
                "mean_first_timing": format_optional(summary.mean_first_timing),
                "median_first_timing": format_optional(summary.median_first_timing),
                "window_share": format_optional(summary.window_share),
            }
        )
    columns = [
        "model",
        "sessions",
        "ask_rate",
        "total_calls",
        "calls_per_asking_session",
        "mean_first_timing",
        "median_first_timing",
        "window_share",
    ]
    return pd.DataFrame(rows, columns=columns).astype(
        {"sessions": int, "total_calls": int, "ask_rate": float, "calls_per_asking_session": float}
    )


def voi_plot_series(voi: pd.DataFrame) -> pd.DataFrame:
    """Long-form plot data: the injection curve plus flat oracle and NC reference lines."""
    x_min, x_max = float(INJECTION_FRACTIONS[0]), float(INJECTION_FRACTIONS[-1])
    rows = []
    for entry in voi.to_dict("records"):
        scope = {"benchmark": entry["benchmark"], "dimension": entry["dimension"]}
        for fraction, label in zip(INJECTION_FRACTIONS, INJECTION_LABELS, strict=True):
            if not math.isnan(entry[label]):
                point = {"series": "injection", "x": float(fraction), "y": entry[label]}
                rows.append({**scope, **point})
        for series, label in (("oracle", "Oracle"), ("no_clarification", "NC")):
            if not math.isnan(entry[label]):
                rows.append({**scope, "series": series, "x": x_min, "y": entry[label]})
                rows.append({**scope, "series": series, "x": x_max, "y": entry[label]})
    frame = pd.DataFrame(rows, columns=["benchmark", "dimension", "series", "x", "y"])
    return frame.astype({"x": float, "y": float})


def gap_lost(curve: Mapping[str, float], label: str) -> float:
    """Share of the oracle-NC gap already lost at an injection column.

    Computed as `(Oracle - x) / (Oracle - NC)`; NaN when the curve has no positive gap
    or lacks the column. A front-loaded curve has lost a large share at `Inj-10`.
    """
    gap = curve["Oracle"] - curve["NC"]
    lost = curve["Oracle"] - curve[label]
    if math.isnan(gap) or math.isnan(lost) or gap <= 0:
        return math.nan
    return lost / gap


def optimal_window(curve: Mapping[str, float], tolerance: float) -> list[Decimal]:
    """Injection fractions whose value lies within `tolerance` of the curve's Inj-10 value."""
    if math.isnan(curve["Inj-10"]):
        return []
    return [
        fraction
        for fraction, label in zip(INJECTION_FRACTIONS, INJECTION_LABELS, strict=True)
        if not math.isnan(curve[label]) and abs(curve[label] - curve["Inj-10"]) <= tolerance + 1e-12
    ]


def natural_ask_overlay(
    pooled_voi: pd.DataFrame, asks: Sequence[AskSummary], tolerance: float
) -> pd.DataFrame:
    """Pooled VOI plot series with the natural-ask timings drawn over them.

    For every dimension curve it adds an `optimal_window` series (the points of
    `optimal_window`) and one vertical `ask:<model>` line, from y 0 to 1, at each asking
    model's mean first-ask timing. Models that never ask get no line.
    """
    rows = voi_plot_series(pooled_voi).to_dict("records")
    for entry in pooled_voi.to_dict("records"):
        scope = {"benchmark": entry["benchmark"], "dimension": entry["dimension"]}
        for fraction in optimal_window(entry, tolerance):
            point = {"x": float(fraction), "y": entry[Condition.injection(fraction).label]}
            rows.append({**scope, "series": "optimal_window", **point})
        for summary in asks:
            if summary.mean_first_timing is None:
                continue
            for y in (0.0, 1.0):
                point = {"x": summary.mean_first_timing, "y": y}
                rows.append({**scope, "series": f"ask:{summary.model}", **point})
    frame = pd.DataFrame(rows, columns=["benchmark", "dimension", "series", "x", "y"])
    return frame.astype({"x": float, "y": float})


def findings_table(
    voi: pd.DataFrame,
    ponr: pd.DataFrame,
    kendall: pd.DataFrame,
    settings: AnalysisSettings,
) -> pd.DataFrame:
    """Headline findings as strings, each derived from another analysis table.

    - `gap_lost_inj10`, `gap_lost_inj50`: `gap_lost` of each curve at Inj-10 and Inj-50.
    - `optimal_window`: injection fractions within the tolerance of the Inj-10 value.
    - `ponr`: the point-of-no-return grid, one entry per stratum.
    - `tau_range`: smallest and largest off-diagonal tau.
    """
    rows = []
    for entry in voi.to_dict("records"):
        scope = f"{entry['benchmark']}/{entry['dimension']}"
        for label in ("Inj-10", "Inj-50"):
            finding = f"gap_lost_{label.replace('-', '').lower()}"
            value = format_optional(gap_lost(entry, label))
            rows.append({"finding": finding, "scope": scope, "value": value})
        window = ABSENT
        if not math.isnan(entry["Inj-10"]):
            fractions = optimal_window(entry, settings.optimal_window_tolerance)
            window = ",".join(Condition.injection(fraction).label for fraction in fractions)
        rows.append({"finding": "optimal_window", "scope": scope, "value": window})

    for entry in ponr.to_dict("records"):
        for ambiguity in AmbiguityClass:
            rows.append(
                {
                    "finding": "ponr",
                    "scope": f"{entry['dimension']}/{ambiguity.value}",
                    "value": entry[ambiguity.value],
                }
            )

    models = list(kendall["model"])
    off_diagonal = [
        kendall.loc[row, col]
        for row in range(len(models))
        for col in models[row + 1 :]
        if not math.isnan(kendall.loc[row, col])
    ]
    tau_range = ABSENT
    if off_diagonal:
        low, high = format_optional(min(off_diagonal)), format_optional(max(off_diagonal))
        tau_range = f"{low}..{high}"
    rows.append({"finding": "tau_range", "scope": "all", "value": tau_range})
    return pd.DataFrame(rows, columns=["finding", "scope", "value"]).astype(object)


def analyze_run(
    run_dir: Path,
    out_dir: Path | None = None,
    settings: AnalysisSettings | None = None,
    *,
    trial_filter: TrialFilter = accept_all,
) -> AnalysisResult:
    """Builds every analysis table for a run directory.

    Re-running on the same archive produces byte-identical files: tables are sorted,
    floats are written with a fixed format and every permutation stream is keyed.

    Args:
        run_dir (Path): Directory holding `trials.jsonl`, `variants.json` and `manifest.json`.
        out_dir (Path | None, optional): Output directory. Defaults to `run_dir/analysis`.
        settings (AnalysisSettings | None, optional): Analysis knobs.
        trial_filter (TrialFilter, optional): Restricts the trials analyzed. Defaults to all.

    Returns:
        AnalysisResult: Written files by name, and the PONR strata left out.

    Raises:
        ArchiveMissingError: The archive or its variant snapshot is missing.
        ArchiveError: No trial in the archive was graded.
    """
    run_dir = Path(run_dir)
    settings = settings or AnalysisSettings()
    out_dir = Path(out_dir) if out_dir is not None else run_dir / ANALYSIS_DIR

    trials = load_trials(run_dir, trial_filter)
    variants_path = run_dir / VARIANTS_FILE
    if not variants_path.is_file():
        raise ArchiveMissingError(variants_path)
    variants = {variant.variant_id: variant for variant in load_variants(variants_path)}
    manifest = load_manifest(run_dir) if (run_dir / MANIFEST_FILE).is_file() else None
    seed = settings.stats_seed
    if seed is None:
        seed = manifest.stats_seed if manifest is not None else 0

    graded = [trial for trial in trials if trial.status is TrialStatus.COMPLETED]
    if not graded:
        raise ArchiveError(f"Archive in {run_dir} has no graded trials.")
    unknown = sorted({trial.variant_id for trial in trials} - set(variants))
    if unknown:
        raise ArchiveError(f"Trials reference variants missing from {VARIANTS_FILE}: {unknown}")

    forced = [trial for trial in trials if trial.protocol is Protocol.FORCED]
    natural = [trial for trial in trials if trial.protocol is Protocol.NATURAL]
    cells = cell_summaries(forced, settings.k)

    out_dir.mkdir(parents=True, exist_ok=True)
    files: dict[str, Path] = {}

    voi = voi_curves_table(cells, variants)
    files["voi_curves"] = _write_csv(voi, out_dir / VOI_CURVES_FILE, voi_curves_adapter)
    plot = voi_plot_series(voi)
    files["voi_plot"] = _write_csv(plot, out_dir / VOI_PLOT_FILE, plot_series_adapter)
    complete = voi_curves_table(complete_unit_cells(cells), variants)
    files["voi_curves_complete"] = _write_csv(
        complete, out_dir / VOI_COMPLETE_FILE, voi_curves_adapter
    )
    pooled = voi_curves_table(cells, pooled_variants(variants))
    files["voi_curves_pooled"] = _write_csv(pooled, out_dir / VOI_POOLED_FILE, voi_curves_adapter)

    wasted = wasted_compute_table(forced, variants, settings)
    files["wasted_compute"] = _write_csv(
        wasted, out_dir / WASTED_COMPUTE_FILE, wasted_compute_adapter
    )

    tau, tau_p = kendall_tables(cells)
    files["kendall_matrix"] = _write_csv(tau, out_dir / KENDALL_MATRIX_FILE, tau_table_adapter)
    files["kendall_pvalues"] = _write_csv(tau_p, out_dir / KENDALL_PVALUES_FILE, tau_table_adapter)
    pairs = pairwise_tau_table(cells, variants)
    files["kendall_by_benchmark"] = _write_csv(
        pairs, out_dir / KENDALL_PAIRS_FILE, pairwise_tau_adapter
    )

    ponr, ponr_tests, excluded = ponr_tables(cells, variants, settings, seed)
    files["ponr"] = _write_csv(ponr, out_dir / PONR_FILE, ponr_grid_adapter)
    files["ponr_tests"] = _write_csv(ponr_tests, out_dir / PONR_TESTS_FILE)

    if natural:
        summaries = model_ask_summaries(natural, settings)
        asks = ask_summary_table(summaries)
        files["ask_summary"] = _write_csv(asks, out_dir / ASK_SUMMARY_FILE, ask_table_adapter)
        per_variant = ask_by_variant_table(natural, variants)
        files["ask_by_variant"] = _write_csv(
            per_variant, out_dir / ASK_BY_VARIANT_FILE, ask_by_variant_adapter
        )
        timings = ask_timings_table(natural, settings.ask_window)
        files["ask_timings"] = _write_csv(timings, out_dir / ASK_TIMINGS_FILE, ask_timings_adapter)
        overlay = natural_ask_overlay(pooled, summaries, settings.optimal_window_tolerance)
        files["natural_ask_overlay"] = _write_csv(
            overlay, out_dir / ASK_OVERLAY_FILE, plot_series_adapter
        )
    else:
        for name in NATURAL_ONLY_FILES:
            (out_dir / name).unlink(missing_ok=True)

    counts = run_counts_table(trials, variants)
    files["run_counts"] = _write_csv(counts, out_dir / RUN_COUNTS_FILE, run_counts_adapter)

    findings = findings_table(voi, ponr, tau, settings)
    files["findings"] = _write_csv(findings, out_dir / FINDINGS_FILE, findings_adapter)

    meta = {
        "config_hash": manifest.config_hash if manifest is not None else None,
        "k": settings.k,
        "n_perm": settings.n_perm,
        "alpha": settings.alpha,
        "stats_seed": seed,
        "trials": len(trials),
        "graded_trials": len(graded),
        "protocols": sorted({trial.protocol.value for trial in trials}),
        "excluded_strata": excluded,
        "complete_units": len(complete_units(cells)),
        "cells": {
            "|".join((cell.variant_id, cell.model, cell.condition.key)): {
                "n_trials": cell.n_trials,
                "n_success": cell.n_success,
            }
            for cell in cells
        },
    }
    meta_path = out_dir / META_FILE
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    files["meta"] = meta_path
    logger.info("Wrote %d analysis files to %s", len(files), out_dir)
    return AnalysisResult(out_dir=out_dir, files=files, excluded_strata=excluded)
