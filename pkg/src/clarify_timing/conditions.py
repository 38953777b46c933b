"""Information dimensions, ambiguity classes and the seven experimental conditions."""

from decimal import Decimal
from enum import Enum

from pydantic import ConfigDict, field_validator, model_validator

from .pydantic_adapters import HARNESS_CONFIG, HarnessModel


class Dimension(str, Enum):
    """Category of the information removed from a task."""

    GOAL = "goal"
    CONSTRAINT = "constraint"
    INPUT = "input"
    CONTEXT = "context"


class AmbiguityClass(str, Enum):
    """Severity of a removal."""

    OUTCOME_CRITICAL = "outcome_critical"
    DIVERGENT = "divergent"
    BENIGN = "benign"


class ConditionKind(str, Enum):
    """How the missing information reaches the agent."""

    ORACLE = "oracle"
    NO_CLARIFICATION = "no_clarification"
    INJECTION = "injection"


INJECTION_FRACTIONS: tuple[Decimal, ...] = tuple(
    Decimal(value) for value in ("0.1", "0.3", "0.5", "0.7", "0.9")
)


def as_fraction(value: Decimal | float | str) -> Decimal:
    """Normalizes an injection fraction to its canonical `Decimal` ("0.1" … "0.9").

    Floats are converted through `str` so `0.1` maps to `Decimal("0.1")` exactly.

    Raises:
        ValueError: If the value is not one of the five injection fractions.
    """
    fraction = value if isinstance(value, Decimal) else Decimal(str(value))
    for known in INJECTION_FRACTIONS:
        if fraction == known:
            return known
    raise ValueError(
        f"Injection fraction {value} is not one of {[str(f) for f in INJECTION_FRACTIONS]}."
    )


class Condition(HarnessModel):
    """One of the seven conditions.

    Fractions serialize as decimal strings, so grouping by condition never
    depends on float formatting.
    """

    model_config = ConfigDict(**HARNESS_CONFIG, extra="allow")

    kind: ConditionKind
    fraction: Decimal | None = None

    @field_validator("fraction", mode="before")
    @classmethod
    def _canonical_fraction(cls, value: object) -> object:
        if value is None:
            return None
        return as_fraction(value)  # type: ignore[arg-type]

    @model_validator(mode="after")
    def _fraction_iff_injection(self) -> "Condition":
        if self.kind is ConditionKind.INJECTION and self.fraction is None:
            raise ValueError("Injection conditions require a fraction.")
        if self.kind is not ConditionKind.INJECTION and self.fraction is not None:
            raise ValueError(f"{self.kind.value} conditions take no fraction.")
        return self

    @classmethod
    def oracle(cls) -> "Condition":
        return cls(kind=ConditionKind.ORACLE)

    @classmethod
    def no_clarification(cls) -> "Condition":
        return cls(kind=ConditionKind.NO_CLARIFICATION)

    @classmethod
    def injection(cls, fraction: Decimal | float | str) -> "Condition":
        return cls(kind=ConditionKind.INJECTION, fraction=as_fraction(fraction))

    @classmethod
    def from_key(cls, key: str) -> "Condition":
        """Parses `oracle`, `no_clarification` or `injection:<fraction>`."""
        kind, _, fraction = key.partition(":")
        if kind == ConditionKind.INJECTION.value:
            return cls.injection(fraction)
        if fraction:
            raise ValueError(f"Unknown condition key: {key!r}.")
        return cls(kind=ConditionKind(kind))

    @property
    def key(self) -> str:
        """Stable grouping key, e.g. `injection:0.3`."""
        if self.fraction is None:
            return self.kind.value
        return f"{self.kind.value}:{self.fraction}"

    @property
    def label(self) -> str:
        """Column label used in tables: `Oracle`, `Inj-30`, `NC`."""
        if self.kind is ConditionKind.ORACLE:
            return "Oracle"
        if self.kind is ConditionKind.NO_CLARIFICATION:
            return "NC"
        return f"Inj-{int(self.fraction * 100)}"  # type: ignore[operator]

    @property
    def is_injection(self) -> bool:
        return self.kind is ConditionKind.INJECTION


ALL_CONDITIONS: tuple[Condition, ...] = (
    Condition.oracle(),
    *(Condition.injection(fraction) for fraction in INJECTION_FRACTIONS),
    Condition.no_clarification(),
)
"""The seven conditions in table column order: Oracle, Inj-10 … Inj-90, NC."""
