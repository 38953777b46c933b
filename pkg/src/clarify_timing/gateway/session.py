"""Agent handles: one open session per endpoint, one in-flight exchange per handle."""

import logging
import queue
import subprocess
import threading
from abc import ABC, abstractmethod
from types import TracebackType

import httpx

from ..exceptions import (
    AgentError,
    AgentTimeoutError,
    AgentTransportError,
    ProtocolViolationError,
    VersionMismatchError,
)
from ..sim.agent import act
from .endpoints import (
    EndpointSpec,
    HttpEndpoint,
    ProcessEndpoint,
    ScriptedEndpoint,
    SimulatorEndpoint,
)
from .wire import (
    PROTOCOL_VERSION,
    AgentRequest,
    Finish,
    Handshake,
    Message,
    ToolCall,
    decode_handshake,
    decode_response,
    encode_record,
)

logger = logging.getLogger(__name__)

AgentReply = ToolCall | Message | Finish


class AgentHandle(ABC):
    """An open session with one agent."""

    name: str

    @abstractmethod
    def handshake(self) -> Handshake:
        """Returns the agent's handshake record."""

    @abstractmethod
    def send(self, request: AgentRequest) -> AgentReply:
        """Delivers one request and waits for its single response."""

    def close(self) -> None:  # noqa: B027
        """Releases the session's resources."""

    def __enter__(self) -> "AgentHandle":
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        traceback: TracebackType | None,
    ) -> None:
        self.close()


class SimulatorHandle(AgentHandle):
    def __init__(self, endpoint: SimulatorEndpoint):
        self.name = endpoint.name
        self._endpoint = endpoint

    def handshake(self) -> Handshake:
        return Handshake(protocol_version=PROTOCOL_VERSION, agent=self.name)

    def send(self, request: AgentRequest) -> AgentReply:
        task = self._endpoint.tasks.get(request.variant_id)
        if task is None:
            raise AgentError(f"Simulator {self.name!r} has no profile for {request.variant_id!r}.")
        return act(task, request, salt=self._endpoint.stream_salt)


class ScriptedHandle(AgentHandle):
    def __init__(self, endpoint: ScriptedEndpoint):
        self.name = endpoint.name
        self._endpoint = endpoint

    def handshake(self) -> Handshake:
        return Handshake(protocol_version=self._endpoint.protocol_version, agent=self.name)

    def send(self, request: AgentRequest) -> AgentReply:
        script = self._endpoint.scripts.get(request.variant_id, self._endpoint.default_script)
        position = request.step_index - 1
        return script[position] if position < len(script) else Finish()


class ProcessHandle(AgentHandle):
    """Child process speaking JSONL on stdin/stdout.

    A reader thread moves stdout lines into a queue so reads can time out; `None` in the
    queue marks end of stream. A timed-out process may still answer later, so it is
    killed and the next request goes to a fresh process with its own handshake.
    """

    def __init__(self, endpoint: ProcessEndpoint):
        self.name = endpoint.name
        self._endpoint = endpoint
        self._stale = False
        self._spawn()

    def _spawn(self) -> None:
        try:
            self._process = subprocess.Popen(
                self._endpoint.command,
                cwd=self._endpoint.cwd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as err:
            raise AgentTransportError(f"Cannot start agent {self.name!r}: {err}") from err
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._reader = threading.Thread(
            target=self._pump, args=(self._process, self._lines), daemon=True
        )
        self._reader.start()

    @staticmethod
    def _pump(process: subprocess.Popen, lines: "queue.Queue[str | None]") -> None:
        assert process.stdout is not None
        for line in process.stdout:
            lines.put(line)
        lines.put(None)

    def _read_line(self) -> str:
        try:
            line = self._lines.get(timeout=self._endpoint.timeout)
        except queue.Empty as err:
            self._stale = True
            raise AgentTimeoutError(self._endpoint.timeout) from err
        if line is None:
            raise AgentTransportError(f"Agent {self.name!r} closed its output stream.")
        if len(line.encode("utf-8")) > self._endpoint.max_response_bytes:
            raise ProtocolViolationError(
                f"Response of {len(line.encode('utf-8'))} bytes exceeds the "
                f"{self._endpoint.max_response_bytes}-byte cap."
            )
        return line

    def _restart(self) -> None:
        logger.warning("Restarting %s after a timed-out request", self.name)
        self._stop(kill=True)
        self._stale = False
        self._spawn()
        greeting = self.handshake()
        if greeting.protocol_version != PROTOCOL_VERSION:
            raise VersionMismatchError(PROTOCOL_VERSION, greeting.protocol_version)

    def handshake(self) -> Handshake:
        return decode_handshake(self._read_line())

    def send(self, request: AgentRequest) -> AgentReply:
        if self._stale:
            self._restart()
        if self._endpoint.passthrough is not None:
            request = request.model_copy(update={"passthrough": self._endpoint.passthrough})
        try:
            assert self._process.stdin is not None
            self._process.stdin.write(encode_record(request) + "\n")
            self._process.stdin.flush()
        except (OSError, ValueError) as err:
            raise AgentTransportError(f"Cannot write to agent {self.name!r}: {err}") from err
        return decode_response(self._read_line())

    def _stop(self, *, kill: bool) -> None:
        if kill:
            self._process.kill()
        if self._process.stdin is not None and not self._process.stdin.closed:
            try:
                self._process.stdin.close()
            except OSError:
                logger.debug("stdin of %s already closed", self.name)
        try:
            self._process.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._process.kill()
            self._process.wait()

    def close(self) -> None:
        self._stop(kill=self._stale)


class HttpHandle(AgentHandle):
    """Each record is POSTed to the endpoint URL; the body of the reply is one record."""

    def __init__(self, endpoint: HttpEndpoint, transport: httpx.BaseTransport | None = None):
        self.name = endpoint.name
        self._endpoint = endpoint
        self._client = httpx.Client(
            timeout=endpoint.timeout, headers=endpoint.headers, transport=transport
        )

    def _post(self, body: str) -> bytes:
        try:
            response = self._client.post(
                self._endpoint.url,
                content=body.encode("utf-8"),
                headers={"Content-Type": "application/json"},
            )
        except httpx.TimeoutException as err:
            raise AgentTimeoutError(self._endpoint.timeout) from err
        except httpx.HTTPError as err:
            raise AgentTransportError(f"Agent {self.name!r} unreachable: {err}") from err
        if response.status_code >= 400:
            raise AgentTransportError(
                f"Agent {self.name!r} answered HTTP {response.status_code}."
            )
        if len(response.content) > self._endpoint.max_response_bytes:
            raise ProtocolViolationError(
                f"Response of {len(response.content)} bytes exceeds the "
                f"{self._endpoint.max_response_bytes}-byte cap."
            )
        return response.content

    def handshake(self) -> Handshake:
        return decode_handshake(
            self._post(encode_record(Handshake(protocol_version=PROTOCOL_VERSION)))
        )

    def send(self, request: AgentRequest) -> AgentReply:
        if self._endpoint.passthrough is not None:
            request = request.model_copy(update={"passthrough": self._endpoint.passthrough})
        return decode_response(self._post(encode_record(request)))

    def close(self) -> None:
        self._client.close()


def open_session(
    endpoint: EndpointSpec, *, http_transport: httpx.BaseTransport | None = None
) -> AgentHandle:
    """Opens a handle for an endpoint and checks the handshake version.

    Args:
        endpoint (EndpointSpec): Endpoint descriptor.
        http_transport (httpx.BaseTransport | None, optional): Transport for HTTP
            endpoints, e.g. `httpx.MockTransport` in tests. Defaults to None.

    Returns:
        AgentHandle: Ready handle; close it (or use it as a context manager) when done.

    Raises:
        AgentTransportError: The endpoint cannot be reached.
        VersionMismatchError: The agent speaks another protocol version.
    """
    if isinstance(endpoint, SimulatorEndpoint):
        handle: AgentHandle = SimulatorHandle(endpoint)
    elif isinstance(endpoint, ScriptedEndpoint):
        handle = ScriptedHandle(endpoint)
    elif isinstance(endpoint, ProcessEndpoint):
        handle = ProcessHandle(endpoint)
    else:
        handle = HttpHandle(endpoint, transport=http_transport)

    try:
        greeting = handle.handshake()
        if greeting.protocol_version != PROTOCOL_VERSION:
            raise VersionMismatchError(PROTOCOL_VERSION, greeting.protocol_version)
    except AgentError:
        handle.close()
        raise
    logger.debug("Session open with %s (%s)", handle.name, greeting.protocol_version)
    return handle


def exchange(handle: AgentHandle, request: AgentRequest, attempts: int = 1) -> AgentReply:
    """Sends one request and returns exactly one response.

    Transport errors are retried up to `attempts` times in total; timeouts and
    protocol violations are not.

    Raises:
        ProtocolViolationError: The response is malformed or calls a tool not offered.
        AgentTimeoutError: The agent did not answer in time.
        AgentTransportError: Every attempt failed to reach the agent.
    """
    for attempt in range(1, attempts + 1):
        try:
            response = handle.send(request)
            break
        except AgentTransportError:
            if attempt == attempts:
                raise
            logger.warning(
                "Transport error talking to %s, retrying (%d/%d)", handle.name, attempt, attempts
            )

    if isinstance(response, ToolCall) and not request.offers(response.name):
        raise ProtocolViolationError(
            f"Agent called tool {response.name!r}, which was not offered."
        )
    return response
