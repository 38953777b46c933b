"""Endpoint descriptors: where an agent lives and how to reach it."""

from pathlib import Path
from typing import Annotated, Literal, TypeAlias

from pydantic import Field, JsonValue

from ..pydantic_adapters import HarnessModel
from ..sim.profiles import SimTask
from .wire import PROTOCOL_VERSION, AgentResponse, Finish

DEFAULT_TIMEOUT = 300.0
DEFAULT_MAX_RESPONSE_BYTES = 1_000_000


class SimulatorEndpoint(HarnessModel):
    """The built-in simulated agent.

    `tasks` maps variant ids to what the simulator knows about them; the engine fills
    it from the corpus. `salt` separates the divergence streams of simulated models
    that share profiles, and defaults to the endpoint name.
    """

    kind: Literal["simulator"] = "simulator"
    name: str = "sim"
    salt: str | None = None
    tasks: dict[str, SimTask] = {}

    @property
    def stream_salt(self) -> str:
        return self.name if self.salt is None else self.salt


class ScriptedEndpoint(HarnessModel):
    """Replays fixed responses per variant; response `i` answers step `i + 1`.

    Steps past the end of a script receive `finish`.
    """

    kind: Literal["scripted"] = "scripted"
    name: str = "scripted"
    scripts: dict[str, list[AgentResponse]] = {}
    default_script: list[AgentResponse] = [Finish()]
    protocol_version: str = PROTOCOL_VERSION


class ProcessEndpoint(HarnessModel):
    """An agent wrapper started as a child process speaking JSONL over stdin/stdout."""

    kind: Literal["process"] = "process"
    name: str
    command: Annotated[list[str], Field(min_length=1)]
    cwd: Path | None = None
    timeout: Annotated[float, Field(gt=0)] = DEFAULT_TIMEOUT
    max_response_bytes: Annotated[int, Field(gt=0)] = DEFAULT_MAX_RESPONSE_BYTES
    passthrough: dict[str, JsonValue] | None = None


class HttpEndpoint(HarnessModel):
    """An agent wrapper behind one HTTP URL; each record is POSTed as a JSON body."""

    kind: Literal["http"] = "http"
    name: str
    url: str
    headers: dict[str, str] = {}
    timeout: Annotated[float, Field(gt=0)] = DEFAULT_TIMEOUT
    max_response_bytes: Annotated[int, Field(gt=0)] = DEFAULT_MAX_RESPONSE_BYTES
    passthrough: dict[str, JsonValue] | None = None


EndpointSpec: TypeAlias = Annotated[
    SimulatorEndpoint | ScriptedEndpoint | ProcessEndpoint | HttpEndpoint,
    Field(discriminator="kind"),
]
