"""Invariant finders for variants and trials, and the checked types built from them."""

from collections import Counter
from collections.abc import Iterable
from typing import Annotated, TypeAlias

from ..decorators import bundle, invariant_checker, invariant_validator
from ..gateway.wire import ASK_USER
from ..pydantic_adapters import harness_type_adapter
from .models import Protocol, TaskVariant, Trial, TrialStatus


def validate_variant(variant: TaskVariant) -> list[str]:
    """Finds violated `TaskVariant` invariants; each message names the field.

    Args:
        variant (TaskVariant): Variant to inspect.

    Returns:
        list[str]: Violations, empty when the variant is well formed.
    """
    violations = []
    if not variant.variant_id.strip():
        violations.append("variant_id empty")
    if not variant.removed_segments:
        violations.append("removed_segments empty")
    for position, segment in enumerate(variant.removed_segments):
        if not segment.value.strip():
            violations.append(f"removed_segments[{position}].value empty")
    if variant.underspecified_prompt == variant.oracle_prompt:
        violations.append("prompts identical")
    if any(tool.name == ASK_USER for tool in variant.tools):
        violations.append(f"tools must not list `{ASK_USER}`")
    return violations


def corpus_error_finder(variants: Iterable[TaskVariant]) -> list[str]:
    """Duplicate `variant_id`s across a corpus."""
    counts = Counter(variant.variant_id for variant in variants)
    return [f"variant_id duplicated: {vid!r}" for vid, count in counts.items() if count > 1]


def action_count_finder(trial: Trial) -> list[str]:
    violations = []
    if trial.total_actions != len(trial.actions):
        violations.append(
            f"total_actions is {trial.total_actions} but {len(trial.actions)} actions are recorded"
        )
    if trial.pre_injection_actions + trial.post_injection_actions != trial.total_actions:
        violations.append(
            "pre_injection_actions + post_injection_actions "
            f"({trial.pre_injection_actions} + {trial.post_injection_actions}) "
            f"!= total_actions ({trial.total_actions})"
        )
    indices = [action.index for action in trial.actions]
    if indices != list(range(1, len(indices) + 1)):
        violations.append(f"action indices are not consecutive from 1: {indices}")
    return violations


def injection_finder(trial: Trial) -> list[str]:
    """Injection bookkeeping: point, pre/post split and the per-action flags."""
    violations = []
    if not trial.condition.is_injection:
        if trial.injection_point is not None:
            violations.append("injection_point present for a non-injection condition")
        if trial.pre_injection_actions != 0:
            violations.append("pre_injection_actions must be 0 for a non-injection condition")
        if any(action.is_pre_injection for action in trial.actions):
            violations.append("is_pre_injection set in a non-injection trial")
        return violations

    if trial.injection_point is None:
        return ["injection_point absent for an injection condition"]
    if trial.status is TrialStatus.FAILED:
        if trial.pre_injection_actions > trial.injection_point:
            violations.append("pre_injection_actions exceeds injection_point")
    elif trial.pre_injection_actions != trial.injection_point:
        violations.append(
            f"pre_injection_actions ({trial.pre_injection_actions}) "
            f"!= injection_point ({trial.injection_point})"
        )
    flags = [action.is_pre_injection for action in trial.actions]
    expected = [position < trial.pre_injection_actions for position in range(len(flags))]
    if flags != expected:
        violations.append("is_pre_injection flags do not match pre_injection_actions")
    return violations


def ask_event_finder(trial: Trial) -> list[str]:
    if trial.protocol is Protocol.FORCED and trial.ask_events:
        return ["ask_events recorded in a forced-injection trial"]
    return [
        f"ask event at action {event.action_index} outside 1..{trial.total_actions}"
        for event in trial.ask_events
        if event.action_index > trial.total_actions
    ]


variant_checker = invariant_checker("variant_error", validate_variant)
action_count_checker = invariant_checker("action_count_error", action_count_finder)
injection_checker = invariant_checker("injection_error", injection_finder)
ask_event_checker = invariant_checker("ask_event_error", ask_event_finder)

variant_invariants = invariant_validator(variant_checker)
action_counts = invariant_validator(action_count_checker)
injection_bookkeeping = invariant_validator(injection_checker)
ask_events = invariant_validator(ask_event_checker)

CheckedVariant: TypeAlias = Annotated[TaskVariant, variant_invariants()]
CheckedTrial: TypeAlias = Annotated[
    Trial, bundle(action_counts(), injection_bookkeeping(), ask_events())
]

checked_variant_adapter = harness_type_adapter(CheckedVariant)
checked_corpus_adapter = harness_type_adapter(list[CheckedVariant])
checked_trial_adapter = harness_type_adapter(CheckedTrial)


def trial_error_finder(trial: Trial) -> list[str]:
    """Every violated `Trial` invariant, across all finders."""
    return [*action_count_finder(trial), *injection_finder(trial), *ask_event_finder(trial)]
