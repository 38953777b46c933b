"""Task variants, actions and trial records."""

from enum import Enum
from typing import Annotated, Literal, TypeAlias

from pydantic import ConfigDict, Field, JsonValue

from ..conditions import AmbiguityClass, Condition, Dimension
from ..gateway.wire import ToolDescriptor, Turn
from ..pydantic_adapters import HARNESS_CONFIG, HarnessModel
from ..sim.profiles import CommitmentProfile

NonNegativeInt: TypeAlias = Annotated[int, Field(ge=0)]
PositiveInt: TypeAlias = Annotated[int, Field(gt=0)]


class RemovedSegment(HarnessModel):
    """Ground-truth information removed from the oracle prompt.

    An empty `subdimension` renders with the fallback injection template.
    """

    dimension: Dimension
    subdimension: str = ""
    value: str


class ExactMatchGrader(HarnessModel):
    """Success iff the agent's final answer equals `expected` (surrounding whitespace ignored)."""

    kind: Literal["exact_match"] = "exact_match"
    expected: str


class CommandGrader(HarnessModel):
    """External predicate: receives the trial record on stdin, exits 0 (pass) or 1 (fail)."""

    kind: Literal["command"] = "command"
    command: Annotated[list[str], Field(min_length=1)]
    timeout: Annotated[float, Field(gt=0)] = 60.0


class SimGrader(HarnessModel):
    """Seeded Bernoulli draw from the simulator's analytic success probability."""

    kind: Literal["sim"] = "sim"
    profile: CommitmentProfile


GraderSpec: TypeAlias = Annotated[
    ExactMatchGrader | CommandGrader | SimGrader, Field(discriminator="kind")
]


class TaskVariant(HarnessModel):
    """An underspecified task.

    `tools` are the environment tools the agent may call; `ask_user` is never listed
    here because the protocol decides whether it is offered.
    """

    variant_id: str
    benchmark: str
    oracle_prompt: str
    underspecified_prompt: str
    removed_segments: list[RemovedSegment]
    primary_dimension: Dimension
    ambiguity_class: AmbiguityClass
    grader: GraderSpec
    tools: list[ToolDescriptor] = []


class Action(HarnessModel):
    """One agent step: a tool call or a message turn.

    Serialized with the released field name `action_name`; unknown fields survive a
    round trip.
    """

    model_config = ConfigDict(**HARNESS_CONFIG, extra="allow")

    index: PositiveInt
    name: str = Field(alias="action_name")
    parameters: dict[str, JsonValue] = {}
    result: str = ""
    is_pre_injection: bool = False


class AskEvent(HarnessModel):
    action_index: PositiveInt
    question: str


class TrialStatus(str, Enum):
    """Outcome of running a trial, independent of task success."""

    COMPLETED = "completed"
    FAILED = "failed"
    UNGRADED = "ungraded"


class Protocol(str, Enum):
    FORCED = "forced"
    NATURAL = "natural"


class Trial(HarnessModel):
    """One execution record.

    Structural parsing only; the cross-field invariants live in `trial.checks` and are
    enforced by the archive through `CheckedTrial`.
    """

    model_config = ConfigDict(**HARNESS_CONFIG, extra="allow")

    variant_id: str
    model: str
    condition: Condition
    protocol: Protocol = Protocol.FORCED
    injection_point: NonNegativeInt | None = None
    seed: int
    actions: list[Action] = []
    conversation: list[Turn] = []
    task_success: bool = False
    total_actions: NonNegativeInt
    pre_injection_actions: NonNegativeInt
    post_injection_actions: NonNegativeInt
    duration_seconds: Annotated[float, Field(ge=0.0)] = 0.0
    ask_events: list[AskEvent] = []
    status: TrialStatus = TrialStatus.COMPLETED
    annotations: list[str] = []
    final_answer: str | None = None

    @property
    def cell_key(self) -> tuple[str, str, str]:
        return (self.variant_id, self.model, self.condition.key)

    @property
    def graded(self) -> bool:
        return self.status is TrialStatus.COMPLETED

    def to_record(self) -> str:
        """Archive line for the trial (no trailing newline)."""
        return self.model_dump_json(by_alias=True)
