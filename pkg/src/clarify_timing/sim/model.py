"""Closed-form commitment and success probabilities of the simulated agent."""

from ..conditions import Condition, ConditionKind
from .profiles import CommitmentProfile, CommitmentShape


def commitment(profile: CommitmentProfile, t: float) -> float:
    """Fraction of the first `t` of the trajectory committed to the missing dimension.

    Concave profiles grow as `t ** exponent`; linear and constraint profiles grow as `t`.
    The constraint reconciliation penalty is applied in `injected_success_probability`.

    Args:
        profile (CommitmentProfile): Commitment parameters.
        t (float): Position in the trajectory, in `[0, 1]`.

    Returns:
        float: Commitment in `[0, 1]`, with `C(0) = 0` and `C(1) = 1`.

    Raises:
        ValueError: If `t` lies outside `[0, 1]`.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"Trajectory position must lie in [0, 1], got {t}.")
    if profile.shape is CommitmentShape.CONCAVE:
        return t**profile.exponent
    return t


def injected_success_probability(profile: CommitmentProfile, t: float) -> float:
    """Success probability when the missing information arrives at position `t`."""
    committed = commitment(profile, t)
    recovered = profile.p_nc + (profile.p_oracle - profile.p_nc) * (1.0 - committed)
    penalised = recovered - profile.effective_reconciliation_rate * committed
    return min(1.0, max(0.0, penalised))


def success_probability(profile: CommitmentProfile, condition: Condition) -> float:
    """Per-trial success probability of the simulated agent under a condition."""
    if condition.kind is ConditionKind.ORACLE:
        return profile.p_oracle
    if condition.kind is ConditionKind.NO_CLARIFICATION:
        return profile.p_nc
    fraction = float(condition.fraction)  # type: ignore[arg-type]
    return injected_success_probability(profile, fraction)


def voi(profile: CommitmentProfile, t: float) -> float:
    """Value of clarifying at `t`: injected success probability minus the NC anchor."""
    return injected_success_probability(profile, t) - profile.p_nc


def pass_at_k_probability(p: float, k: int = 3) -> float:
    """Expected pass@k of a cell whose trials succeed independently with probability `p`."""
    return 1.0 - (1.0 - p) ** k
