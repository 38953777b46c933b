"""Errors raised by the harness itself."""

from pathlib import Path


class HarnessError(Exception):
    """Base class for every error raised by `clarify_timing`."""

    def __init__(self, message: str):
        """Store the message on the instance for reporting."""
        self.message = message
        super().__init__(message)


class ConfigError(HarnessError):
    """A configuration document could not be parsed or is inconsistent."""

    def __init__(self, problems: list[str]):
        """One entry per problem, formatted `field.path: message`."""
        self.problems = problems
        super().__init__("Invalid configuration:\n  " + "\n  ".join(problems))


class ArchiveError(HarnessError):
    """Run archive could not be read or written."""


class ArchiveMissingError(ArchiveError):
    """The archive file does not exist."""

    def __init__(self, path: Path):
        """Name the missing file."""
        self.path = path
        super().__init__(f"Run archive not found: {path}")


class ArchiveParseError(ArchiveError):
    """A record in the archive is malformed."""

    def __init__(self, path: Path, line_number: int, reason: str):
        """Name the file and 1-based line of the bad record."""
        self.path = path
        self.line_number = line_number
        super().__init__(f"{path}:{line_number}: malformed trial record: {reason}")


class ArchiveWriteError(ArchiveError):
    """Storage failed while appending a record."""

    def __init__(self, path: Path, record_index: int, reason: str):
        """Name the 0-based index of the record that could not be written."""
        self.path = path
        self.record_index = record_index
        super().__init__(f"{path}: failed writing record {record_index}: {reason}")


class TrialRejectedError(ArchiveError):
    """A trial violating its invariants was refused before any write."""

    def __init__(self, violations: list[str]):
        """Keep the individual violations."""
        self.violations = violations
        super().__init__("Trial rejected: " + "; ".join(violations))


class AgentError(HarnessError):
    """Failure in the exchange with an agent."""


class AgentTransportError(AgentError):
    """The agent endpoint is unreachable or the connection broke."""


class AgentTimeoutError(AgentError):
    """The agent did not answer within the configured timeout."""

    def __init__(self, timeout: float):
        """Record the timeout that expired."""
        self.timeout = timeout
        super().__init__(f"Agent did not respond within {timeout:g} s.")


class ProtocolViolationError(AgentError):
    """The agent broke the wire contract (bad record, oversized, tool not offered)."""


class VersionMismatchError(AgentError):
    """Handshake protocol versions differ."""

    def __init__(self, expected: str, received: str):
        """Name both versions."""
        self.expected = expected
        self.received = received
        super().__init__(
            f"Protocol version mismatch: harness speaks {expected!r}, agent speaks {received!r}."
        )


class GradingError(HarnessError):
    """The grading hook failed; the trial is left ungraded."""


class CalibrationError(HarnessError):
    """No action budget can be calibrated for an (agent, variant) pair."""


class ReportInputMissingError(HarnessError):
    """An analysis file needed by the report is missing."""

    def __init__(self, path: Path):
        """Name the missing file."""
        self.path = path
        super().__init__(f"Analysis input missing: {path}")
