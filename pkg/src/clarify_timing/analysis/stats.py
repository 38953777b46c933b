"""Permutation tests, point-of-no-return scans and Kendall rank correlation."""

import itertools
import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from decimal import Decimal
from typing import Annotated, Literal, TypeAlias

import numpy as np
import pandas as pd
from pydantic import Field
from scipy import stats as scipy_stats

from ..conditions import INJECTION_FRACTIONS, as_fraction
from ..pydantic_adapters import HarnessModel
from ..sim.rng import keyed_generator
from .metrics import CellSummary

logger = logging.getLogger(__name__)

DEFAULT_PERMUTATIONS = 10_000
DEFAULT_ALPHA = 0.05
EXACT_ENUMERATION_LIMIT = 2_000_000
EXACT_TAU_MAX_N = 10
_MIN_ASYMPTOTIC_N = 3
_PAIRWISE_TAU_MAX_N = 2_000
_BATCH = 2048
_TAU_CHUNK = 50_000
_SMALLEST_P = float(np.nextafter(0.0, 1.0))

Alternative: TypeAlias = Literal["greater", "less", "two-sided"]


class StatResult(HarnessModel):
    """Outcome of one significance test.

    `p_value` is never 0: Monte Carlo tests use the add-one estimate and exact tests
    always count the observed labeling.
    """

    statistic: float
    p_value: Annotated[float, Field(gt=0.0, le=1.0)]
    method: str
    n_permutations: int | None = None
    corrected: bool = False
    correction_factor: int | None = None


def _as_sample(values: Iterable[float], name: str) -> np.ndarray:
    sample = np.asarray(list(values), dtype=float)
    if sample.size == 0:
        raise ValueError(f"{name} is empty.")
    return sample


def _extreme(
    statistics: np.ndarray, observed: float, tolerance: float, alternative: Alternative
) -> int:
    if alternative == "greater":
        hits = statistics >= observed - tolerance
    elif alternative == "less":
        hits = statistics <= observed + tolerance
    else:
        hits = np.abs(statistics) >= abs(observed) - tolerance
    return int(np.count_nonzero(hits))


def permutation_test(
    group_a: Sequence[float],
    group_b: Sequence[float],
    n_perm: int = DEFAULT_PERMUTATIONS,
    seed: int = 0,
    *,
    alternative: Alternative = "greater",
    exact: bool | None = None,
    stream: str = "",
) -> StatResult:
    """Two-sample permutation test on the difference of means, `mean(a) - mean(b)`.

    When every relabeling fits in the permutation budget (`C(N, |a|) <= n_perm`) the
    test enumerates them and `p = #{stat >= observed} / C(N, |a|)`. Otherwise it draws
    `n_perm` relabelings from a Philox stream keyed by `(seed, stream)` and
    `p = (1 + #{stat >= observed}) / (1 + n_perm)`.

    Comparisons allow a tolerance of `1e-9` times the pooled range, so p-values do not
    change when both groups are shifted or scaled.

    Args:
        group_a (Sequence[float]): First group.
        group_b (Sequence[float]): Second group.
        n_perm (int, optional): Permutation budget. Defaults to 10,000.
        seed (int, optional): Seed of the Monte Carlo stream. Defaults to 0.
        alternative (Alternative, optional): Direction of the test. Defaults to "greater".
        exact (bool | None, optional): Force exact (True) or Monte Carlo (False) mode;
            None picks automatically. Defaults to None.
        stream (str, optional): Extra key separating streams that share a seed.

    Returns:
        StatResult: Statistic, p-value and the number of permutations evaluated.

    Raises:
        ValueError: A group is empty, or exact mode would enumerate too many relabelings.
    """
    a = _as_sample(group_a, "group_a")
    b = _as_sample(group_b, "group_b")
    pooled = np.concatenate([a, b])
    n_a, total_size = a.size, pooled.size
    pooled_sum = pooled.sum()
    observed = float(a.mean() - b.mean())
    spread = float(np.ptp(pooled))
    tolerance = 1e-9 * (spread if spread > 0 else 1.0)

    def statistics(sums_a: np.ndarray) -> np.ndarray:
        return sums_a / n_a - (pooled_sum - sums_a) / (total_size - n_a)

    labelings = math.comb(total_size, n_a)
    use_exact = labelings <= n_perm if exact is None else exact
    if use_exact:
        if labelings > EXACT_ENUMERATION_LIMIT:
            raise ValueError(f"Exact mode would enumerate {labelings} labelings.")
        combos = np.fromiter(
            itertools.chain.from_iterable(itertools.combinations(range(total_size), n_a)),
            dtype=np.intp,
            count=labelings * n_a,
        ).reshape(labelings, n_a)
        count = _extreme(statistics(pooled[combos].sum(axis=1)), observed, tolerance, alternative)
        return StatResult(
            statistic=observed,
            p_value=count / labelings,
            method=f"permutation:exact:{alternative}",
            n_permutations=labelings,
        )

    generator = keyed_generator("permutation", seed, stream)
    count = 0
    remaining = n_perm
    while remaining:
        size = min(remaining, _BATCH)
        shuffled = generator.permuted(np.tile(pooled, (size, 1)), axis=1)
        sums = shuffled[:, :n_a].sum(axis=1)
        count += _extreme(statistics(sums), observed, tolerance, alternative)
        remaining -= size
    return StatResult(
        statistic=observed,
        p_value=(1 + count) / (1 + n_perm),
        method=f"permutation:monte_carlo:{alternative}",
        n_permutations=n_perm,
    )


class PonrResult(HarnessModel):
    """Latest injection fraction still significantly better than NC, if any.

    `results` holds the one-sided test of every fraction against NC, keyed by the
    fraction string; their p-values are uncorrected and compared to `alpha / 5`.
    """

    fraction: Decimal | None
    alpha: float
    threshold: float
    results: dict[str, StatResult]

    @property
    def label(self) -> str:
        """`30%`, or `--` when no fraction is significant."""
        if self.fraction is None:
            return "--"
        return f"{int(self.fraction * 100)}%"


def point_of_no_return(
    injection_cells: Mapping[Decimal | float | str, Sequence[float]],
    nc_cells: Sequence[float],
    alpha: float = DEFAULT_ALPHA,
    *,
    n_perm: int = DEFAULT_PERMUTATIONS,
    seed: int = 0,
    stream: str = "",
) -> PonrResult:
    """Scans the five injection fractions against NC with a Bonferroni correction.

    Args:
        injection_cells (Mapping): Cell pass@k values per injection fraction.
        nc_cells (Sequence[float]): Cell pass@k values of the NC condition.
        alpha (float, optional): Family-wise level. Defaults to 0.05.
        n_perm (int, optional): Permutations per test. Defaults to 10,000.
        seed (int, optional): Seed of the permutation streams. Defaults to 0.
        stream (str, optional): Prefix separating the streams of different strata.

    Returns:
        PonrResult: The latest fraction with `p < alpha / 5`, and every test.

    Raises:
        ValueError: A fraction is missing, unknown or has no cells.
    """
    by_fraction = {
        as_fraction(fraction): list(values) for fraction, values in injection_cells.items()
    }
    missing = [str(fraction) for fraction in INJECTION_FRACTIONS if fraction not in by_fraction]
    if missing:
        raise ValueError(f"Point-of-no-return scan is missing fractions {missing}.")

    correction = len(INJECTION_FRACTIONS)
    threshold = alpha / correction
    results = {}
    latest = None
    for fraction in INJECTION_FRACTIONS:
        result = permutation_test(
            by_fraction[fraction], nc_cells, n_perm, seed, stream=f"{stream}ponr:{fraction}"
        ).model_copy(update={"corrected": True, "correction_factor": correction})
        results[str(fraction)] = result
        if result.p_value < threshold:
            latest = fraction
    return PonrResult(fraction=latest, alpha=alpha, threshold=threshold, results=results)


def _complete_pairs(
    x: Sequence[float | None], y: Sequence[float | None]
) -> tuple[np.ndarray, np.ndarray]:
    if len(x) != len(y):
        raise ValueError(f"Vectors differ in length ({len(x)} vs {len(y)}).")
    pairs = [
        (float(a), float(b))
        for a, b in zip(x, y, strict=True)
        if a is not None and b is not None and not (math.isnan(a) or math.isnan(b))
    ]
    if len(pairs) < 2:
        raise ValueError(f"Kendall tau needs at least 2 complete pairs, got {len(pairs)}.")
    xs, ys = zip(*pairs, strict=True)
    return np.asarray(xs), np.asarray(ys)


def _pair_signs(values: np.ndarray) -> np.ndarray:
    upper_i, upper_j = np.triu_indices(values.size, k=1)
    return np.sign(values[upper_j] - values[upper_i])


def _pairwise_tau_b(xs: np.ndarray, ys: np.ndarray) -> float:
    x_signs, y_signs = _pair_signs(xs), _pair_signs(ys)
    untied_x = np.count_nonzero(x_signs)
    untied_y = np.count_nonzero(y_signs)
    return float(x_signs @ y_signs) / math.sqrt(untied_x * untied_y)


def _tau_b_statistic(xs: np.ndarray, ys: np.ndarray) -> float:
    # scipy's variance term divides by n - 2, so short vectors never reach it.
    if xs.size <= _PAIRWISE_TAU_MAX_N:
        return _pairwise_tau_b(xs, ys)
    return float(scipy_stats.kendalltau(xs, ys, variant="b").statistic)


def tau_b(x: Sequence[float | None], y: Sequence[float | None]) -> float:
    """Tie-corrected Kendall tau over the complete pairs (NaN if either side is constant)."""
    xs, ys = _complete_pairs(x, y)
    if np.ptp(xs) == 0 or np.ptp(ys) == 0:
        return math.nan
    return _tau_b_statistic(xs, ys)


def _exact_tau_p_value(xs: np.ndarray, ys: np.ndarray) -> tuple[float, int]:
    """Two-sided p over all `n!` pairings of `ys` with `xs`.

    Under permutation the tie structure of both vectors is fixed, so ranking by
    `|S| = |concordant - discordant|` is the same as ranking by `|tau_b|`.
    """
    n = xs.size
    upper_i, upper_j = np.triu_indices(n, k=1)
    x_signs = _pair_signs(xs)
    observed = abs(int(_pair_signs(ys) @ x_signs))
    total = math.factorial(n)
    count = 0
    orderings = itertools.permutations(range(n))
    while True:
        chunk = np.array(list(itertools.islice(orderings, _TAU_CHUNK)), dtype=np.intp)
        if chunk.size == 0:
            break
        permuted = ys[chunk]
        scores = np.sign(permuted[:, upper_j] - permuted[:, upper_i]) @ x_signs
        count += int(np.count_nonzero(np.abs(scores) >= observed))
    return count / total, total


def kendall_tau(
    x: Sequence[float | None],
    y: Sequence[float | None],
    *,
    exact_max_n: int = EXACT_TAU_MAX_N,
) -> StatResult:
    """Kendall tau-b with a two-sided p-value.

    Pairs with a missing value on either side are dropped first. Up to `exact_max_n`
    complete pairs (and always below 3) the p-value enumerates every pairing; above
    that it uses the normal approximation. A constant vector leaves tau undefined:
    the statistic is NaN and `p = 1`.

    Raises:
        ValueError: Lengths differ or fewer than 2 complete pairs remain.
    """
    xs, ys = _complete_pairs(x, y)
    n = xs.size
    if np.ptp(xs) == 0 or np.ptp(ys) == 0:
        return StatResult(statistic=math.nan, p_value=1.0, method="kendall_tau_b:undefined")

    if n <= max(exact_max_n, _MIN_ASYMPTOTIC_N - 1):
        p_value, orderings = _exact_tau_p_value(xs, ys)
        return StatResult(
            statistic=_pairwise_tau_b(xs, ys),
            p_value=p_value,
            method="kendall_tau_b:exact",
            n_permutations=orderings,
        )
    result = scipy_stats.kendalltau(xs, ys, variant="b", method="asymptotic")
    return StatResult(
        statistic=float(result.statistic),
        p_value=min(1.0, max(float(result.pvalue), _SMALLEST_P)),
        method="kendall_tau_b:asymptotic",
    )


class TauMatrix(HarnessModel):
    """Symmetric model x model matrix of Kendall results."""

    models: list[str]
    entries: dict[str, dict[str, StatResult]]
    n_units: dict[str, dict[str, int]]

    def frame(self, field: Literal["statistic", "p_value"] = "statistic") -> pd.DataFrame:
        data = [
            [getattr(self.entries[row][col], field) for col in self.models] for row in self.models
        ]
        frame = pd.DataFrame(data, index=self.models, columns=self.models)
        frame.index.name = "model"
        return frame

    def off_diagonal(self) -> list[float]:
        return [
            self.entries[row][col].statistic
            for position, row in enumerate(self.models)
            for col in self.models[position + 1 :]
            if not math.isnan(self.entries[row][col].statistic)
        ]


def cross_model_tau_matrix(
    cells: Iterable[CellSummary],
    models: Sequence[str],
    *,
    strict: bool = False,
    exact_max_n: int = EXACT_TAU_MAX_N,
) -> TauMatrix:
    """Kendall tau between models over the (variant, condition) units both completed.

    Args:
        cells (Iterable[CellSummary]): Cells of every model.
        models (Sequence[str]): Models, in matrix order.
        strict (bool, optional): Raise instead of recording NaN when a pair shares fewer
            than 2 units. Defaults to False.
        exact_max_n (int, optional): Largest unit count with an exact p-value.

    Returns:
        TauMatrix: Entries with diagonal 1.

    Raises:
        ValueError: Fewer than two models, or (strict) a pair with too few shared units.
    """
    if len(models) < 2:
        raise ValueError(f"A tau matrix needs at least 2 models, got {list(models)}.")
    vectors: dict[str, dict[tuple[str, str], float]] = {model: {} for model in models}
    for cell in cells:
        if cell.model in vectors and cell.pass_at_k is not None:
            vectors[cell.model][(cell.variant_id, cell.condition.key)] = cell.pass_at_k

    entries: dict[str, dict[str, StatResult]] = {model: {} for model in models}
    n_units: dict[str, dict[str, int]] = {model: {} for model in models}
    for row in models:
        entries[row][row] = StatResult(statistic=1.0, p_value=1.0, method="identity")
        n_units[row][row] = len(vectors[row])
    for position, row in enumerate(models):
        for col in models[position + 1 :]:
            units = sorted(set(vectors[row]) & set(vectors[col]))
            x = [vectors[row][unit] for unit in units]
            y = [vectors[col][unit] for unit in units]
            try:
                result = kendall_tau(x, y, exact_max_n=exact_max_n)
            except ValueError:
                if strict:
                    raise
                logger.warning("Too few shared units for tau between %s and %s", row, col)
                result = StatResult(
                    statistic=math.nan, p_value=1.0, method="kendall_tau_b:insufficient"
                )
            entries[row][col] = entries[col][row] = result
            n_units[row][col] = n_units[col][row] = len(units)
    return TauMatrix(models=list(models), entries=entries, n_units=n_units)
