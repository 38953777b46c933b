"""Wire records exchanged with agents, one JSON object per line.

Field order in every record is the declaration order below, and `None` fields are
omitted, so identical inputs always serialize to identical bytes.
"""

from typing import Annotated, Literal, TypeAlias

from pydantic import ConfigDict, Field, JsonValue, ValidationError

from ..exceptions import ProtocolViolationError
from ..pydantic_adapters import HARNESS_CONFIG, HarnessModel, harness_type_adapter

PROTOCOL_VERSION = "clarify-wire/1"
ASK_USER = "ask_user"

Role: TypeAlias = Literal["system", "user", "assistant", "tool"]


class Turn(HarnessModel):
    """One conversation turn.

    `synthetic` marks user turns written by the harness (injections), which are
    recorded with role `user` like the rest of the user's messages.
    """

    model_config = ConfigDict(**HARNESS_CONFIG, extra="allow")

    role: Role
    text: str
    synthetic: bool = False
    tool_name: str | None = None


class ToolParameter(HarnessModel):
    type: str = "string"
    description: str = ""
    default: JsonValue | None = None


class ToolParameters(HarnessModel):
    properties: dict[str, ToolParameter] = {}
    required: list[str] = []


class ToolDescriptor(HarnessModel):
    """A tool offered to the agent, in function-calling schema shape."""

    name: str
    description: str = ""
    parameters: ToolParameters = ToolParameters()


ASK_USER_TOOL = ToolDescriptor(
    name=ASK_USER,
    description=(
        "Ask the user a clarifying question to get more information about the task. "
        "Use this when the task is ambiguous or you need specific details to proceed."
    ),
    parameters=ToolParameters(
        properties={
            "question": ToolParameter(description="The clarifying question to ask."),
            "context": ToolParameter(description="Optional additional context.", default=""),
        },
        required=["question"],
    ),
)


class Handshake(HarnessModel):
    """First record an agent sends after its session opens."""

    type: Literal["handshake"] = "handshake"
    protocol_version: str
    agent: str | None = None


class RequestLimits(HarnessModel):
    max_actions_remaining: Annotated[int, Field(ge=0)]


class AgentRequest(HarnessModel):
    """Everything the agent sees before choosing its next action.

    `step_index` is 1 + the number of actions the agent has already taken.
    """

    type: Literal["request"] = "request"
    variant_id: str
    seed: int
    step_index: Annotated[int, Field(gt=0)]
    limits: RequestLimits
    tools: list[ToolDescriptor]
    conversation: list[Turn]
    passthrough: dict[str, JsonValue] | None = None

    def offers(self, tool_name: str) -> bool:
        return any(tool.name == tool_name for tool in self.tools)


class ToolCall(HarnessModel):
    """Call of an offered tool; `result` is the agent environment's output, if any."""

    type: Literal["tool_call"] = "tool_call"
    name: str
    arguments: dict[str, JsonValue] = {}
    result: str | None = None


class Message(HarnessModel):
    type: Literal["message"] = "message"
    text: str


class Finish(HarnessModel):
    type: Literal["finish"] = "finish"
    answer: str = ""


AgentResponse: TypeAlias = Annotated[ToolCall | Message | Finish, Field(discriminator="type")]

response_adapter = harness_type_adapter(AgentResponse)
handshake_adapter = harness_type_adapter(Handshake)


def encode_record(record: HarnessModel) -> str:
    """Single-line JSON for a wire record, without the trailing newline."""
    return record.model_dump_json(exclude_none=True)


def decode_response(raw: str | bytes) -> ToolCall | Message | Finish:
    """Parses one agent response record.

    Raises:
        ProtocolViolationError: If the record is not valid JSON or not a known response.
    """
    try:
        return response_adapter.validate_json(raw)
    except ValidationError as err:
        raise ProtocolViolationError(f"Malformed agent response: {_first_error(err)}") from err


def decode_handshake(raw: str | bytes) -> Handshake:
    try:
        return handshake_adapter.validate_json(raw)
    except ValidationError as err:
        raise ProtocolViolationError(f"Malformed handshake: {_first_error(err)}") from err


def _first_error(err: ValidationError) -> str:
    first = err.errors()[0]
    location = ".".join(str(part) for part in first["loc"]) or "record"
    return f"{location}: {first['msg']}"
