"""Builders for variants, actions and trials shared by the test modules."""

from collections.abc import Sequence
from pathlib import Path

from clarify_timing.conditions import AmbiguityClass, Condition, Dimension
from clarify_timing.gateway.wire import ToolCall, ToolDescriptor
from clarify_timing.trial.models import (
    Action,
    AskEvent,
    ExactMatchGrader,
    GraderSpec,
    Protocol,
    RemovedSegment,
    TaskVariant,
    Trial,
    TrialStatus,
)

ECHO_AGENT = Path(__file__).parent / "fixtures" / "echo_agent.py"


def make_variant(
    variant_id: str = "report-1",
    *,
    benchmark: str = "tac",
    dimension: Dimension = Dimension.GOAL,
    ambiguity_class: AmbiguityClass = AmbiguityClass.OUTCOME_CRITICAL,
    segments: Sequence[RemovedSegment] | None = None,
    grader: GraderSpec | None = None,
    tools: Sequence[str] = ("search", "write_file"),
) -> TaskVariant:
    if segments is None:
        segments = [RemovedSegment(dimension=dimension, subdimension="format", value="CSV format")]
    return TaskVariant(
        variant_id=variant_id,
        benchmark=benchmark,
        oracle_prompt=f"[{variant_id}] Export the sales report in CSV format.",
        underspecified_prompt=f"[{variant_id}] Export the sales report.",
        removed_segments=list(segments),
        primary_dimension=dimension,
        ambiguity_class=ambiguity_class,
        grader=grader or ExactMatchGrader(expected="42"),
        tools=[ToolDescriptor(name=name) for name in tools],
    )


def tool_calls(count: int, name: str = "search") -> list[ToolCall]:
    return [
        ToolCall(name=name, arguments={"step": step}, result=f"{name} ok")
        for step in range(1, count + 1)
    ]


def make_actions(names: Sequence[str], pre: int = 0) -> list[Action]:
    return [
        Action(index=index, name=name, parameters={"step": index}, is_pre_injection=index <= pre)
        for index, name in enumerate(names, start=1)
    ]


def make_trial(
    *,
    variant_id: str = "report-1",
    model: str = "agent-a",
    condition: Condition | None = None,
    seed: int = 0,
    names: Sequence[str] = ("search",),
    actions: Sequence[Action] | None = None,
    pre: int = 0,
    success: bool = False,
    status: TrialStatus = TrialStatus.COMPLETED,
    protocol: Protocol = Protocol.FORCED,
    ask_at: Sequence[int] = (),
) -> Trial:
    """A trial satisfying every archive invariant for the given shape."""
    condition = condition or Condition.oracle()
    actions = list(actions) if actions is not None else make_actions(names, pre)
    return Trial(
        variant_id=variant_id,
        model=model,
        condition=condition,
        protocol=protocol,
        injection_point=pre if condition.is_injection else None,
        seed=seed,
        actions=actions,
        task_success=success,
        total_actions=len(actions),
        pre_injection_actions=pre,
        post_injection_actions=len(actions) - pre,
        ask_events=[AskEvent(action_index=index, question="Which format?") for index in ask_at],
        status=status,
    )
