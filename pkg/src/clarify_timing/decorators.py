"""Decorators that turn invariant finders into Pydantic validators."""

import functools
from collections.abc import Callable
from typing import Concatenate, ParamSpec, TypeVar

from pydantic import AfterValidator
from pydantic_core import PydanticCustomError

from .exceptions import create_invariant_error

CheckParams = ParamSpec("CheckParams")
CheckType = TypeVar("CheckType")


def invariant_checker(
    error_name: str,
    finder_func: Callable[Concatenate[CheckType, CheckParams], list[str]],
) -> Callable[Concatenate[CheckType, CheckParams], CheckType]:
    """Turns an invariant `finder` into a `checker`.

    Finder functions inspect a record (a trial, a variant) and return a `list[str]`
    with one entry per violated invariant. An empty list means the record is valid.

    Checker functions return the record unchanged when the finder reports nothing and
    raise a `PydanticCustomError` listing every violation otherwise.

    Usage:
        ```python
        def trial_count_finder(trial: Trial) -> list[str]: ...


        trial_count_checker = invariant_checker("trial_count_error", trial_count_finder)
        ```

    Args:
        error_name (str): Name included with `PydanticCustomError` if violations are present.
        finder_func (Callable[Concatenate[CheckType, CheckParams], list[str]]): The finder function.

    Returns:
        Callable[Concatenate[CheckType, CheckParams], CheckType]: The checker function.
    """

    def checker(
        record: CheckType, *args: CheckParams.args, **kwargs: CheckParams.kwargs
    ) -> CheckType:
        if violations := finder_func(record, *args, **kwargs):
            raise create_invariant_error(error_name, violations)
        return record

    return checker


def invariant_validator(
    checker_func: Callable[Concatenate[CheckType, CheckParams], CheckType],
) -> Callable[CheckParams, AfterValidator]:
    """Turns a `checker` into a factory of pydantic [`AfterValidator`](https://docs.pydantic.dev/latest/concepts/validators/#annotated-validators) objects.

    The validator can be placed in an `Annotated` type so that any `TypeAdapter`
    built from it enforces the invariants after the structural parse.

    Usage:
        ```python
        trial_counts = invariant_validator(trial_count_checker)
        CheckedTrial: TypeAlias = Annotated[Trial, trial_counts()]
        ```

    Args:
        checker_func (Callable[Concatenate[CheckType, CheckParams], CheckType]): Checker function to use in validator function.

    Returns:
        Callable[CheckParams, AfterValidator]: Validator function that returns an `AfterValidator` object.
    """  # noqa: E501

    def validator_factory(*args: CheckParams.args, **kwargs: CheckParams.kwargs) -> AfterValidator:
        return AfterValidator(functools.partial(checker_func, *args, **kwargs))

    return validator_factory


def bundle(*args: AfterValidator) -> AfterValidator:
    """Combine several invariant validators so that all violations are reported at once.

    Pydantic stops at the first `AfterValidator` that raises. A bundled validator runs
    every member and raises a single error carrying all messages, which is what the
    archive shows when it rejects a trial.

    Usage:
        ```python
        CheckedTrial: TypeAlias = Annotated[Trial, bundle(trial_counts(), trial_injection())]
        ```

    Returns:
        AfterValidator: Pydantic `AfterValidator` object.
    """

    def run_all(record: CheckType) -> CheckType:
        failures: list[Exception] = []
        for member in args:
            try:
                member.func(record)  # type: ignore[call-arg]
            except (PydanticCustomError, ValueError, AssertionError) as err:
                failures.append(err)
        if not failures:
            return record
        violations = [violation for err in failures for violation in _violations(err)]
        message = "\n  ".join(str(err) for err in failures)
        raise PydanticCustomError(
            "bundled_invariant_error",
            message,  # type: ignore[arg-type]
            {"violations": violations},
        )

    return AfterValidator(run_all)


def _violations(err: Exception) -> list[str]:
    if isinstance(err, PydanticCustomError) and err.context:
        return list(err.context.get("violations", [str(err)]))
    return [str(err)]
