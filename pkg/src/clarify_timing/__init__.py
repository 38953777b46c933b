"""Forced-injection and natural-ask harness for clarification timing experiments."""

from .conditions import ALL_CONDITIONS, AmbiguityClass, Condition, ConditionKind, Dimension
from .decorators import bundle, invariant_checker, invariant_validator
from .pydantic_adapters import HarnessModel, harness_type_adapter, harness_validate_call

__all__ = [
    "ALL_CONDITIONS",
    "AmbiguityClass",
    "Condition",
    "ConditionKind",
    "Dimension",
    "bundle",
    "invariant_checker",
    "invariant_validator",
    "HarnessModel",
    "harness_type_adapter",
    "harness_validate_call",
]

__version__ = "0.1.0"
