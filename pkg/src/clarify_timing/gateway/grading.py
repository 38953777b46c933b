"""Grading hook: turns a finished trial into a success flag."""

import logging
import subprocess

from ..exceptions import GradingError
from ..sim.agent import grade_sim
from ..trial.models import CommandGrader, ExactMatchGrader, GraderSpec, SimGrader, Trial

logger = logging.getLogger(__name__)


def grade(grader: GraderSpec, trial: Trial) -> bool:
    """Grades a trial with the variant's grading hook.

    Args:
        grader (GraderSpec): Hook descriptor from the variant.
        trial (Trial): Finished trial; `final_answer` is what `exact_match` compares.

    Returns:
        bool: Whether the task succeeded.

    Raises:
        GradingError: The external predicate crashed, timed out or exited with a
            status other than 0 or 1.
    """
    if isinstance(grader, ExactMatchGrader):
        answer = trial.final_answer
        return answer is not None and answer.strip() == grader.expected.strip()
    if isinstance(grader, SimGrader):
        return grade_sim(trial, grader.profile)
    return _grade_with_command(grader, trial)


def _grade_with_command(grader: CommandGrader, trial: Trial) -> bool:
    try:
        completed = subprocess.run(  # noqa: S603
            grader.command,
            input=trial.to_record(),
            capture_output=True,
            text=True,
            encoding="utf-8",
            timeout=grader.timeout,
            check=False,
        )
    except subprocess.TimeoutExpired as err:
        raise GradingError(f"Grader timed out after {grader.timeout:g} s.") from err
    except OSError as err:
        raise GradingError(f"Grader could not be started: {err}") from err

    if completed.returncode in (0, 1):
        return completed.returncode == 0
    logger.debug("Grader stderr: %s", completed.stderr.strip())
    raise GradingError(f"Grader exited with status {completed.returncode}.")
