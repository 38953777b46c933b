"""Trial records, variant corpus and the run archive."""

from .archive import (
    MANIFEST_FILE,
    TRIALS_FILE,
    VARIANTS_FILE,
    RunArchive,
    RunManifest,
    SkippedCell,
    TrialFilter,
    accept_all,
    append_trial,
    load_manifest,
    load_trials,
    load_variants,
    write_manifest,
    write_variants,
)
from .checks import (
    CheckedTrial,
    CheckedVariant,
    checked_trial_adapter,
    checked_variant_adapter,
    trial_error_finder,
    validate_variant,
)
from .models import (
    Action,
    AskEvent,
    CommandGrader,
    ExactMatchGrader,
    GraderSpec,
    Protocol,
    RemovedSegment,
    SimGrader,
    TaskVariant,
    Trial,
    TrialStatus,
)

__all__ = [
    "MANIFEST_FILE",
    "TRIALS_FILE",
    "VARIANTS_FILE",
    "Action",
    "AskEvent",
    "CheckedTrial",
    "CheckedVariant",
    "CommandGrader",
    "ExactMatchGrader",
    "GraderSpec",
    "Protocol",
    "RemovedSegment",
    "RunArchive",
    "RunManifest",
    "SimGrader",
    "SkippedCell",
    "TaskVariant",
    "Trial",
    "TrialFilter",
    "TrialStatus",
    "accept_all",
    "append_trial",
    "checked_trial_adapter",
    "checked_variant_adapter",
    "load_manifest",
    "load_trials",
    "load_variants",
    "trial_error_finder",
    "validate_variant",
    "write_manifest",
    "write_variants",
]
