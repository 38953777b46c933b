"""Oracle-calibrated action budgets and injection points."""

import math
from decimal import ROUND_FLOOR, Decimal
from fractions import Fraction
from typing import Annotated

from pydantic import Field, model_validator

from ..conditions import Condition, as_fraction
from ..exceptions import CalibrationError
from ..pydantic_adapters import HarnessModel, harness_validate_call


class Budget(HarnessModel):
    model: str
    variant_id: str
    value: Annotated[int, Field(ge=1)]


@harness_validate_call
def calibrate_budget(oracle_lengths: list[Annotated[int, Field(gt=0)]]) -> int:
    """Mean oracle trajectory length, rounded half-up.

    Rounding is done on the exact rational mean, so `[6, 7]` gives 7.

    Raises:
        CalibrationError: No oracle lengths were given.
    """
    if not oracle_lengths:
        raise CalibrationError("Cannot calibrate a budget without terminated oracle trials.")
    mean = Fraction(sum(oracle_lengths), len(oracle_lengths))
    return max(1, math.floor(mean + Fraction(1, 2)))


@harness_validate_call
def injection_action(budget: Annotated[int, Field(ge=1)], fraction: Decimal | float | str) -> int:
    """`max(1, floor(budget * fraction))`, evaluated in decimal arithmetic.

    Raises:
        ValueError: The fraction is not one of the five injection fractions.
    """
    product = Decimal(budget) * as_fraction(fraction)
    return max(1, int(product.to_integral_value(rounding=ROUND_FLOOR)))


class InjectionPlan(HarnessModel):
    """Where an injection condition delivers its message."""

    condition: Condition
    budget: Budget
    inject_action: Annotated[int, Field(ge=1)]

    @model_validator(mode="after")
    def _consistent(self) -> "InjectionPlan":
        if not self.condition.is_injection:
            raise ValueError("Injection plans need an injection condition.")
        expected = injection_action(self.budget.value, self.condition.fraction)
        if self.inject_action != expected:
            raise ValueError(
                f"inject_action {self.inject_action} != max(1, floor("
                f"{self.budget.value} x {self.condition.fraction})) = {expected}"
            )
        return self


def plan_injection(condition: Condition, budget: Budget) -> InjectionPlan:
    return InjectionPlan(
        condition=condition,
        budget=budget,
        inject_action=injection_action(budget.value, condition.fraction),  # type: ignore[arg-type]
    )
