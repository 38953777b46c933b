import pytest
from pydantic import ValidationError

from clarify_timing.conditions import INJECTION_FRACTIONS, Condition
from clarify_timing.exceptions import CalibrationError
from clarify_timing.protocol import (
    Budget,
    InjectionPlan,
    calibrate_budget,
    injection_action,
    plan_injection,
)


@pytest.mark.parametrize(
    ("lengths", "expected"), [([7, 7, 7], 7), ([6, 7, 9], 7), ([6, 7], 7), ([1], 1), ([2, 3, 3], 3)]
)
def test_calibrate_budget(lengths, expected):
    assert calibrate_budget(lengths) == expected


def test_calibrate_budget_needs_lengths():
    with pytest.raises(CalibrationError):
        calibrate_budget([])


def test_injection_action_is_monotone_and_bounded():
    for budget in range(1, 60):
        previous = 1
        for fraction in INJECTION_FRACTIONS:
            action = injection_action(budget, fraction)
            assert 1 <= action <= budget
            assert action >= previous
            assert action >= injection_action(max(1, budget - 1), fraction)
            previous = action


def test_injection_action_rejects_unknown_fraction():
    with pytest.raises(ValueError, match="not one of"):
        injection_action(10, 0.25)


def test_plan_injection():
    budget = Budget(model="agent-a", variant_id="v", value=7)
    plan = plan_injection(Condition.injection(0.1), budget)
    assert plan.inject_action == 1
    assert plan_injection(Condition.injection(0.9), budget).inject_action == 6


def test_inconsistent_plan():
    budget = Budget(model="agent-a", variant_id="v", value=20)
    with pytest.raises(ValidationError, match="inject_action 3"):
        InjectionPlan(condition=Condition.injection(0.1), budget=budget, inject_action=3)
    with pytest.raises(ValidationError):
        InjectionPlan(condition=Condition.oracle(), budget=budget, inject_action=1)
    with pytest.raises(ValidationError):
        Budget(model="agent-a", variant_id="v", value=0)
