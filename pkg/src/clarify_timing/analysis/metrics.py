"""pass@k, per-cell summaries, wasted compute and natural-ask statistics."""

import json
import logging
from collections import Counter, defaultdict
from collections.abc import Callable, Hashable, Iterable, Mapping, Sequence
from fractions import Fraction
from statistics import mean, median
from typing import Annotated, Literal, TypeAlias

import pandas as pd
from pydantic import Field, JsonValue, model_validator

from ..conditions import INJECTION_FRACTIONS, Condition, ConditionKind
from ..pydantic_adapters import HarnessModel
from ..trial.models import Action, TaskVariant, Trial, TrialStatus

logger = logging.getLogger(__name__)

DEFAULT_K = 3
DEFAULT_TIMING_WINDOW = (0.25, 0.5)
CELL_KEYS = ("variant_id", "model", "condition")
VARIANT_KEYS = ("benchmark", "dimension", "ambiguity_class")
COMPLETE_UNIT_CONDITIONS = frozenset(
    condition.key
    for condition in (Condition.oracle(), *map(Condition.injection, INJECTION_FRACTIONS))
)

WasteUnit: TypeAlias = Literal["fraction", "absolute"]
ActionKey: TypeAlias = Callable[[Action], Hashable]
NonNegativeInt: TypeAlias = Annotated[int, Field(ge=0)]


def pass_at_k_exact(n: int, c: int, k: int) -> Fraction:
    """Unbiased pass@k as an exact rational: `1 - C(n - c, k) / C(n, k)`.

    Evaluated as the product `1 - prod_{i=n-c+1}^{n} (1 - k / i)`, which never forms
    the binomial coefficients.

    Raises:
        ValueError: Unless `0 <= c <= n` and `1 <= k <= n`.
    """
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}.")
    if k > n:
        raise ValueError(f"k ({k}) cannot exceed the number of trials n ({n}).")
    if not 0 <= c <= n:
        raise ValueError(f"c must lie in [0, {n}], got {c}.")
    if n - c < k:
        return Fraction(1)
    miss = Fraction(1)
    for i in range(n - c + 1, n + 1):
        miss *= Fraction(i - k, i)
    return 1 - miss


def pass_at_k(n: int, c: int, k: int = DEFAULT_K) -> float:
    """Probability that at least one of `k` trials drawn from `n` (with `c` successes) passes.

    Args:
        n (int): Trials in the cell.
        c (int): Successful trials.
        k (int, optional): Draw size. Defaults to 3.

    Returns:
        float: The estimate, computed exactly and then converted.

    Raises:
        ValueError: Unless `0 <= c <= n` and `1 <= k <= n`.
    """
    return float(pass_at_k_exact(n, c, k))


class CellSummary(HarnessModel):
    """Aggregate of the graded trials of one (variant, model, condition) cell.

    `pass_at_k` is absent when the cell has fewer than `k` graded trials.
    """

    variant_id: str
    model: str
    condition: Condition
    n_trials: NonNegativeInt
    n_success: NonNegativeInt
    k: Annotated[int, Field(gt=0)] = DEFAULT_K
    pass_at_k: Annotated[float, Field(ge=0.0, le=1.0)] | None = None

    @model_validator(mode="after")
    def _consistent(self) -> "CellSummary":
        if self.n_success > self.n_trials:
            raise ValueError(f"n_success ({self.n_success}) exceeds n_trials ({self.n_trials})")
        expected = None
        if self.n_trials >= self.k:
            expected = pass_at_k(self.n_trials, self.n_success, self.k)
        if self.pass_at_k != expected:
            raise ValueError(f"pass_at_k {self.pass_at_k} inconsistent with estimator ({expected})")
        return self


def cell_summaries(trials: Iterable[Trial], k: int = DEFAULT_K) -> list[CellSummary]:
    """One summary per (variant, model, condition), over completed trials only.

    Failed and ungraded trials never enter a cell. Cells come out in the order their
    first trial appears.
    """
    graded = [trial for trial in trials if trial.status is TrialStatus.COMPLETED]
    if not graded:
        return []
    frame = pd.DataFrame(
        {
            "variant_id": [trial.variant_id for trial in graded],
            "model": [trial.model for trial in graded],
            "condition": [trial.condition.key for trial in graded],
            "success": [trial.task_success for trial in graded],
        }
    )
    counts = (
        frame.groupby(list(CELL_KEYS), sort=False)
        .agg(n_trials=("success", "size"), n_success=("success", "sum"))
        .reset_index()
    )
    summaries = []
    for row in counts.itertuples(index=False):
        n_trials, n_success = int(row.n_trials), int(row.n_success)
        summaries.append(
            CellSummary(
                variant_id=row.variant_id,
                model=row.model,
                condition=Condition.from_key(row.condition),
                n_trials=n_trials,
                n_success=n_success,
                k=k,
                pass_at_k=pass_at_k(n_trials, n_success, k) if n_trials >= k else None,
            )
        )
    return summaries


def complete_units(cells: Iterable[CellSummary]) -> set[tuple[str, str]]:
    """(variant, model) units whose oracle and five injection cells all have a pass@k."""
    estimated: dict[tuple[str, str], set[str]] = defaultdict(set)
    for cell in cells:
        if cell.pass_at_k is not None:
            estimated[(cell.variant_id, cell.model)].add(cell.condition.key)
    return {unit for unit, keys in estimated.items() if COMPLETE_UNIT_CONDITIONS <= keys}


def complete_unit_cells(cells: Iterable[CellSummary]) -> list[CellSummary]:
    """Drops the injection cells of incomplete units.

    Oracle and NC cells are all kept, so baseline-only units still count toward those
    two columns and their unit counts can exceed the injection ones.
    """
    cells = list(cells)
    units = complete_units(cells)
    return [
        cell
        for cell in cells
        if not cell.condition.is_injection or (cell.variant_id, cell.model) in units
    ]


def cells_frame(
    cells: Iterable[CellSummary], variants: Mapping[str, TaskVariant] | None = None
) -> pd.DataFrame:
    """Cells as rows, optionally joined to the variant attributes used for grouping."""
    rows = []
    for cell in cells:
        row: dict[str, object] = {
            "variant_id": cell.variant_id,
            "model": cell.model,
            "condition": cell.condition.key,
            "n_trials": cell.n_trials,
            "n_success": cell.n_success,
            "pass_at_k": cell.pass_at_k,
        }
        if variants is not None:
            variant = variants[cell.variant_id]
            row["benchmark"] = variant.benchmark
            row["dimension"] = variant.primary_dimension.value
            row["ambiguity_class"] = variant.ambiguity_class.value
        rows.append(row)
    columns = [*CELL_KEYS, "n_trials", "n_success", "pass_at_k"]
    if variants is not None:
        columns.extend(VARIANT_KEYS)
    return pd.DataFrame(rows, columns=columns)


def group_mean(
    cells: Iterable[CellSummary],
    keys: Sequence[str],
    variants: Mapping[str, TaskVariant] | None = None,
) -> pd.DataFrame:
    """Mean pass@k per group, weighting every cell equally.

    Groups are formed over `keys` (cell keys, or variant attributes when `variants` is
    given). Cells without a pass@k estimate are left out, and a group with no
    remaining cells is absent from the result rather than reported as zero.

    Args:
        cells (Iterable[CellSummary]): Cell summaries.
        keys (Sequence[str]): Grouping columns.
        variants (Mapping[str, TaskVariant] | None, optional): Variants by id.

    Returns:
        pd.DataFrame: `keys` plus `mean`, `n_units` (cells) and `n_trials`.

    Raises:
        ValueError: A key is neither a cell key nor an available variant attribute.
    """
    allowed = set(CELL_KEYS) | (set(VARIANT_KEYS) if variants is not None else set())
    unknown = [key for key in keys if key not in allowed]
    if unknown:
        raise ValueError(f"Cannot group by {unknown}; available keys: {sorted(allowed)}")

    frame = cells_frame(cells, variants).dropna(subset=["pass_at_k"])
    columns = [*keys, "mean", "n_units", "n_trials"]
    if frame.empty:
        return pd.DataFrame(columns=columns)
    grouped = (
        frame.groupby(list(keys), sort=True)
        .agg(
            mean=("pass_at_k", "mean"),
            n_units=("pass_at_k", "size"),
            n_trials=("n_trials", "sum"),
        )
        .reset_index()
    )
    return grouped[columns]


def normalize_value(value: JsonValue) -> JsonValue:
    """Collapses whitespace and case in strings, recursively."""
    if isinstance(value, str):
        return " ".join(value.split()).lower()
    if isinstance(value, dict):
        return {key: normalize_value(item) for key, item in value.items()}
    if isinstance(value, list):
        return [normalize_value(item) for item in value]
    return value


def action_key(action: Action) -> Hashable:
    """Default matching key: exact name plus normalized arguments."""
    return (action.name, json.dumps(normalize_value(action.parameters), sort_keys=True))


def wasted_compute(
    trial: Trial,
    oracle_trace: Sequence[Action],
    mode: WasteUnit = "fraction",
    key: ActionKey = action_key,
) -> float:
    """Pre-injection actions with no counterpart in the oracle trace.

    Matching is multiset: each oracle action can absorb one pre-injection action.

    Args:
        trial (Trial): An injection trial.
        oracle_trace (Sequence[Action]): Actions of the reference oracle trial.
        mode (WasteUnit, optional): `fraction` of pre-injection actions or `absolute`
            count. Defaults to "fraction".
        key (ActionKey, optional): Matching key. Defaults to `action_key`.

    Returns:
        float: Wasted compute; a fraction of 0.0 when nothing preceded the injection.

    Raises:
        ValueError: The trial is not an injection trial.
    """
    if not trial.condition.is_injection:
        raise ValueError(f"Wasted compute needs an injection trial, got {trial.condition.label}.")
    pre_injection = trial.actions[: trial.pre_injection_actions]
    available = Counter(key(action) for action in oracle_trace)
    unmatched = 0
    for action in pre_injection:
        action_id = key(action)
        if available[action_id] > 0:
            available[action_id] -= 1
        else:
            unmatched += 1
    if mode == "absolute":
        return float(unmatched)
    return unmatched / len(pre_injection) if pre_injection else 0.0


def select_oracle_trace(oracle_trials: Iterable[Trial]) -> list[Action] | None:
    """Actions of the median-length terminated oracle trial (lower median, ties by seed)."""
    candidates = sorted(
        (
            trial
            for trial in oracle_trials
            if trial.condition.kind is ConditionKind.ORACLE
            and trial.status is not TrialStatus.FAILED
        ),
        key=lambda trial: (trial.total_actions, trial.seed),
    )
    if not candidates:
        return None
    return list(candidates[(len(candidates) - 1) // 2].actions)


class AskSummary(HarnessModel):
    """Natural-ask behavior of one model; timings are fractions of trajectory length."""

    model: str
    sessions: NonNegativeInt
    ask_rate: Annotated[float, Field(ge=0.0, le=1.0)]
    total_calls: NonNegativeInt
    mean_first_timing: float | None = None
    median_first_timing: float | None = None
    calls_per_asking_session: float = 0.0
    window_share: float | None = None

    @model_validator(mode="after")
    def _timings_iff_asks(self) -> "AskSummary":
        has_timings = self.mean_first_timing is not None
        if has_timings != (self.ask_rate > 0):
            raise ValueError("first-ask timings must be present exactly when ask_rate > 0")
        return self


def first_ask_timing(session: Trial) -> Fraction | None:
    """First ask's action index over the session's total actions; None without asks."""
    if not session.ask_events:
        return None
    return Fraction(session.ask_events[0].action_index, session.total_actions)


def ask_stats(
    sessions: Iterable[Trial],
    model: str | None = None,
    window: tuple[float, float] = DEFAULT_TIMING_WINDOW,
) -> AskSummary:
    """Ask rate, call counts and first-ask timing over natural-ask sessions.

    Failed sessions are left out. First-ask timing is the first ask's action index over
    the session's total actions. Means and medians are taken in exact rational
    arithmetic, so identical timings reproduce exactly.

    Args:
        sessions (Iterable[Trial]): Natural-protocol trials of one model.
        model (str | None, optional): Model label; inferred from the sessions if omitted.
        window (tuple[float, float], optional): Inclusive timing window for `window_share`.

    Returns:
        AskSummary: The summary.

    Raises:
        ValueError: Sessions from several models were mixed without naming a model.
    """
    usable = [trial for trial in sessions if trial.status is not TrialStatus.FAILED]
    models = sorted({trial.model for trial in usable})
    if model is None:
        if len(models) > 1:
            raise ValueError(f"ask_stats expects one model, got {models}.")
        model = models[0] if models else ""

    asking = [trial for trial in usable if trial.ask_events]
    total_calls = sum(len(trial.ask_events) for trial in usable)
    ask_rate = len(asking) / len(usable) if usable else 0.0
    if not asking:
        return AskSummary(
            model=model, sessions=len(usable), ask_rate=ask_rate, total_calls=total_calls
        )

    timings = [timing for trial in asking if (timing := first_ask_timing(trial)) is not None]
    low, high = Fraction(str(window[0])), Fraction(str(window[1]))
    in_window = sum(low <= timing <= high for timing in timings)
    return AskSummary(
        model=model,
        sessions=len(usable),
        ask_rate=ask_rate,
        total_calls=total_calls,
        mean_first_timing=float(mean(timings)),
        median_first_timing=float(median(timings)),
        calls_per_asking_session=total_calls / len(asking),
        window_share=in_window / len(asking),
    )
