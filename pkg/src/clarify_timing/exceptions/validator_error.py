"""Helpers that build and describe pydantic validation errors."""

from pydantic import ValidationError
from pydantic_core import PydanticCustomError


def create_invariant_error(error_type: str, violations: list[str]) -> PydanticCustomError:
    """Error raised by invariant validators; pydantic turns it into a `ValidationError`."""
    violation_str = "\n      ".join([f"- {violation}" for violation in violations])
    error_str = f"{error_type}:\n      {violation_str}"
    return PydanticCustomError(error_type, error_str, {"violations": violations})  # type: ignore


def describe_validation_error(err: ValidationError) -> list[str]:
    """One `field.path: message` line per error, expanding invariant violations."""
    problems = []
    for error in err.errors():
        location = ".".join(str(part) for part in error["loc"]) or "document"
        violations = (error.get("ctx") or {}).get("violations")
        if violations:
            problems.extend(f"{location}: {violation}" for violation in violations)
        else:
            problems.append(f"{location}: {error['msg']}")
    return problems
