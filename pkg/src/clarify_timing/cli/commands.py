"""The three subcommands as plain functions; `cli.main` maps them to exit codes."""

import logging
from pathlib import Path
from typing import TYPE_CHECKING

from ..protocol.experiment import RunResult, run_experiment
from .config import RunConfig, TrialSelector, resolve_experiment
from .report import write_report

if TYPE_CHECKING:
    from ..analysis import AnalysisResult

logger = logging.getLogger(__name__)


def cmd_run(config: RunConfig, selector: TrialSelector | None = None) -> RunResult:
    """Resolves the config, then runs the grid into `config.output_dir`.

    Raises:
        ConfigError: Before anything is written.
    """
    experiment = resolve_experiment(config, selector)
    logger.info(
        "Running %d variants x %d agents x %d conditions x %d seeds (%s protocol)",
        len(experiment.variants),
        len(experiment.agents),
        len(experiment.grid_conditions),
        len(experiment.seeds),
        experiment.protocol.value,
    )
    result = run_experiment(experiment, config.output_dir)
    for cell in result.failed_cells:
        logger.error("Every trial failed in cell %s", cell)
    return result


def cmd_analyze(
    run_dir: Path, out_dir: Path | None = None, selector: TrialSelector | None = None
) -> "AnalysisResult":
    """Writes the analysis tables for a run directory (needs the `analysis` extra).

    Raises:
        HarnessImportError: pandas or scipy is not installed.
        ArchiveError: The archive is missing, unparsable or has no graded trial.
    """
    from ..analysis import analyze_run

    if selector is None:
        return analyze_run(run_dir, out_dir)
    return analyze_run(run_dir, out_dir, trial_filter=selector)


def cmd_report(analysis_dir: Path, out: Path | None = None) -> Path:
    path = write_report(analysis_dir, out)
    logger.info("Report written to %s", path)
    return path
