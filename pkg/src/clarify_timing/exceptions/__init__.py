"""Exceptions for package."""

from .harness_errors import (
    AgentError,
    AgentTimeoutError,
    AgentTransportError,
    ArchiveError,
    ArchiveMissingError,
    ArchiveParseError,
    ArchiveWriteError,
    CalibrationError,
    ConfigError,
    GradingError,
    HarnessError,
    ProtocolViolationError,
    ReportInputMissingError,
    TrialRejectedError,
    VersionMismatchError,
)
from .import_errors import HarnessImportError, PandasImportError, ScipyImportError
from .validator_error import create_invariant_error, describe_validation_error

__all__ = [
    "AgentError",
    "AgentTimeoutError",
    "AgentTransportError",
    "ArchiveError",
    "ArchiveMissingError",
    "ArchiveParseError",
    "ArchiveWriteError",
    "CalibrationError",
    "ConfigError",
    "GradingError",
    "HarnessError",
    "HarnessImportError",
    "PandasImportError",
    "ProtocolViolationError",
    "ReportInputMissingError",
    "ScipyImportError",
    "TrialRejectedError",
    "VersionMismatchError",
    "create_invariant_error",
    "describe_validation_error",
]
