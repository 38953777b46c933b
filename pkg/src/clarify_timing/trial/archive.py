"""Append-only run archive: `trials.jsonl`, `manifest.json` and the variant snapshot."""

import json
import logging
from collections.abc import Callable, Sequence
from pathlib import Path
from types import TracebackType
from typing import IO

from pydantic import ValidationError

from ..conditions import Condition
from ..exceptions import (
    ArchiveMissingError,
    ArchiveParseError,
    ArchiveWriteError,
    ConfigError,
    TrialRejectedError,
    describe_validation_error,
)
from ..pydantic_adapters import HarnessModel
from .checks import checked_corpus_adapter, checked_trial_adapter, corpus_error_finder
from .models import Protocol, TaskVariant, Trial

logger = logging.getLogger(__name__)

TRIALS_FILE = "trials.jsonl"
MANIFEST_FILE = "manifest.json"
VARIANTS_FILE = "variants.json"

TrialFilter = Callable[[str, str, Condition], bool]
"""Predicate over `(variant_id, model, condition)`."""


def accept_all(variant_id: str, model: str, condition: Condition) -> bool:
    return True


class RunArchive:
    """Single-writer, append-only JSONL store of trials.

    Usage:
        ```python
        with RunArchive(run_dir) as archive:
            append_trial(archive, trial)
        trials = load_trials(run_dir / TRIALS_FILE)
        ```

    Opening truncates an existing `trials.jsonl` only when `fresh=True`.
    """

    def __init__(self, run_dir: Path, *, fresh: bool = False):
        self.run_dir = Path(run_dir)
        self.path = self.run_dir / TRIALS_FILE
        self._fresh = fresh
        self._handle: IO[str] | None = None
        self._count = 0

    @property
    def count(self) -> int:
        """Records written through this writer."""
        return self._count

    def open(self) -> "RunArchive":
        self.run_dir.mkdir(parents=True, exist_ok=True)
        mode = "w" if self._fresh else "a"
        self._handle = self.path.open(mode, encoding="utf-8", newline="\n")
        return self

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    def __enter__(self) -> "RunArchive":
        return self.open()

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        traceback: TracebackType | None,
    ) -> None:
        self.close()

    def append(self, trial: Trial) -> int:
        """Writes one trial and returns its 0-based record index.

        Raises:
            TrialRejectedError: The trial violates its invariants; nothing is written.
            ArchiveWriteError: The underlying write failed.
        """
        try:
            checked_trial_adapter.validate_python(trial)
        except ValidationError as err:
            raise TrialRejectedError(describe_validation_error(err)) from err

        if self._handle is None:
            self.open()
        record_index = self._count
        try:
            self._handle.write(trial.to_record() + "\n")  # type: ignore[union-attr]
            self._handle.flush()  # type: ignore[union-attr]
        except OSError as err:
            raise ArchiveWriteError(self.path, record_index, str(err)) from err
        self._count += 1
        return record_index


def append_trial(archive: RunArchive, trial: Trial) -> int:
    """Appends `trial` to an open archive; returns the record index as acknowledgment."""
    return archive.append(trial)


def load_trials(path: Path, filter: TrialFilter = accept_all) -> list[Trial]:  # noqa: A002
    """Reads every trial from a `trials.jsonl` file (or a run directory holding one).

    Args:
        path (Path): Archive file or run directory.
        filter (TrialFilter, optional): Keeps trials for which it returns True. Defaults to all.

    Returns:
        list[Trial]: Matching trials in append order.

    Raises:
        ArchiveMissingError: The archive does not exist.
        ArchiveParseError: A record does not parse or breaks a trial invariant.
    """
    path = Path(path)
    if path.is_dir():
        path = path / TRIALS_FILE
    if not path.is_file():
        raise ArchiveMissingError(path)

    trials = []
    with path.open(encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                trial = checked_trial_adapter.validate_json(line)
            except ValidationError as err:
                reason = "; ".join(describe_validation_error(err)[:3])
                raise ArchiveParseError(path, line_number, reason) from err
            if filter(trial.variant_id, trial.model, trial.condition):
                trials.append(trial)
    logger.debug("Loaded %d trials from %s", len(trials), path)
    return trials


class SkippedCell(HarnessModel):
    model: str
    variant_id: str
    condition: str
    reason: str


class RunManifest(HarnessModel):
    """Everything needed to reproduce a run. Contains no timestamps."""

    harness_version: str
    wire_version: str
    config_hash: str
    protocol: Protocol
    agents: list[str]
    variant_ids: list[str]
    conditions: list[str]
    seeds: list[int]
    budgets: dict[str, dict[str, int]] = {}
    skipped_cells: list[SkippedCell] = []
    failed_cells: list[str] = []
    stats_seed: int = 0


def write_manifest(run_dir: Path, manifest: RunManifest) -> Path:
    path = Path(run_dir) / MANIFEST_FILE
    path.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def load_manifest(run_dir: Path) -> RunManifest:
    path = Path(run_dir) / MANIFEST_FILE
    if not path.is_file():
        raise ArchiveMissingError(path)
    try:
        return RunManifest.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as err:
        raise ArchiveParseError(path, 1, "; ".join(describe_validation_error(err)[:3])) from err


def load_variants(path: Path) -> list[TaskVariant]:
    """Parses a variant corpus (a JSON list of variants) and checks every invariant.

    Raises:
        ConfigError: One `field.path: message` entry per problem.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError([f"variants: file not found: {path}"])
    try:
        variants = checked_corpus_adapter.validate_json(path.read_bytes())
    except ValidationError as err:
        raise ConfigError(
            [f"variants.{problem}" for problem in describe_validation_error(err)]
        ) from err
    duplicates = corpus_error_finder(variants)
    if duplicates:
        raise ConfigError([f"variants: {problem}" for problem in duplicates])
    return variants


def write_variants(run_dir: Path, variants: Sequence[TaskVariant]) -> Path:
    """Snapshot of the corpus a run used, read back by the analysis step."""
    path = Path(run_dir) / VARIANTS_FILE
    records = [variant.model_dump(mode="json", by_alias=True) for variant in variants]
    path.write_text(json.dumps(records, indent=2) + "\n", encoding="utf-8")
    return path
