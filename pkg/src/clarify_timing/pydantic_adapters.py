"""Pydantic building blocks shared by every harness record."""

from collections.abc import Callable
from typing import Any, TypeVar, overload

from pydantic import BaseModel, ConfigDict, TypeAdapter, validate_call

AnyCallableT = TypeVar("AnyCallableT", bound=Callable[..., Any])

HARNESS_CONFIG = ConfigDict(frozen=True, populate_by_name=True)


@overload
def harness_validate_call(
    *, config: ConfigDict | None = None, validate_return: bool = False
) -> Callable[[AnyCallableT], AnyCallableT]: ...


@overload
def harness_validate_call(
    func: AnyCallableT,
    /,
    *,
    config: ConfigDict | None = None,
    validate_return: bool = False,
) -> AnyCallableT: ...


def harness_validate_call(
    func: AnyCallableT | None = None,
    /,
    *,
    config: ConfigDict | None = None,
    validate_return: bool = False,
) -> AnyCallableT | Callable[[AnyCallableT], AnyCallableT]:
    """Pydantic [`validate_call`](https://docs.pydantic.dev/latest/concepts/validation_decorator/) with the harness defaults.

    Used on the numeric entry points of the protocol engine so that a budget of
    `0` or a negative action count fails with a `ValidationError` naming the
    argument instead of silently producing a nonsense injection point.

    `config` values are merged with the harness `ConfigDict`.

    Args:
        func (AnyCallableT | None, optional): Function to wrap; omitted in the `@harness_validate_call(...)` form.
        config (ConfigDict | None, optional): Merged over `arbitrary_types_allowed=True`.
        validate_return (bool, optional): Also validate the return value. Defaults to False.

    Returns:
        AnyCallableT | Callable[[AnyCallableT], AnyCallableT]: Validated function or decorator.
    """  # noqa: E501
    merged = ConfigDict(arbitrary_types_allowed=True)
    merged.update(config or {})
    decorator = validate_call(config=merged, validate_return=validate_return)
    return decorator if func is None else decorator(func)


class HarnessModel(BaseModel):
    """Immutable pydantic [`BaseModel`](https://docs.pydantic.dev/latest/concepts/models/) for harness records.

    Trials, variants and wire records are shared across worker threads, so every
    model is frozen. Fields may be populated by name or by alias, which lets the
    archive keep the released JSON field names (`action_name`) while code uses
    the short attribute names.
    """  # noqa: E501

    model_config = HARNESS_CONFIG


# type is used as the argument name in Pydantic's `TypeAdapter` so keeping it the same here
def harness_type_adapter(
    type: Any,  # noqa: A002
    config: ConfigDict | None = None,
    _parent_depth: int = 2,
    module: str | None = None,
) -> TypeAdapter:
    """Pydantic [`TypeAdapter`](https://docs.pydantic.dev/latest/concepts/type_adapter/) for annotated harness types.

    Annotated types such as `CheckedTrial` carry invariant validators; the adapter
    is how the archive and the corpus loader run them on parsed records.

    Args:
        type (Any): Annotated harness type, e.g. `CheckedTrial` or `list[CheckedVariant]`.
        config (ConfigDict | None, optional): Only allowed for non-model types. Defaults to None.
        _parent_depth (int, optional): Namespace depth for forward references. Defaults to 2.
        module (str | None, optional): Forwarded to pydantic plugins. Defaults to None.

    Returns:
        TypeAdapter: Adapter whose `validate_json` / `validate_python` also run the invariants.
    """  # noqa: E501
    # pydantic refuses `config` for model types, so it is only forwarded when given
    if config is None:
        return TypeAdapter(type, _parent_depth=_parent_depth, module=module)
    return TypeAdapter(type, config=config, _parent_depth=_parent_depth, module=module)
