"""The simulated agent's policy and its grader."""

import logging
import math

from ..gateway.wire import ASK_USER, AgentRequest, Finish, ToolCall, ToolDescriptor
from ..trial.models import Trial
from .model import commitment, success_probability
from .profiles import CommitmentProfile, SimTask
from .rng import keyed_generator, keyed_uniforms

logger = logging.getLogger(__name__)

EXPLORE = "explore"
COMMIT_STEP = "commit_step"
PRODUCE_OUTPUT = "produce_output"
DIVERGENT_SUFFIX = "_divergent"
FINAL_ANSWER = "done"

SIM_TOOLS: list[ToolDescriptor] = [
    ToolDescriptor(name=name, description=description)
    for base, description in (
        (EXPLORE, "Inspect the environment."),
        (COMMIT_STEP, "Make progress that later steps build on."),
        (PRODUCE_OUTPUT, "Write the deliverable."),
    )
    for name in (base, base + DIVERGENT_SUFFIX)
]


def step_name(step: int, length: int) -> str:
    """Oracle action name for a 1-based step of a trajectory of `length` actions."""
    if step >= length:
        return PRODUCE_OUTPUT
    if step <= math.ceil(length / 3):
        return EXPLORE
    return COMMIT_STEP


def is_informed(task: SimTask, request: AgentRequest) -> bool:
    """Whether the conversation already carries the missing information.

    True for the oracle prompt, after any later user turn (an injection) and after
    an answered `ask_user` call.
    """
    conversation = request.conversation
    if conversation and conversation[0].text == task.oracle_prompt:
        return True
    return any(
        turn.role == "user" or (turn.role == "tool" and turn.tool_name == ASK_USER)
        for turn in conversation[1:]
    )


def is_divergent(task: SimTask, request: AgentRequest, salt: str) -> bool:
    """Uninformed step `i` diverges iff its keyed uniform is below `C(i / L)`.

    `L` is the variant's own `trajectory_length`, not the calibrated budget `B`. A
    simulated oracle trial always takes exactly `L` actions, so `B == L` for every
    simulated variant and `i / L` is the position the budget assigns to step `i`.
    Requests carry no budget, so the agent has no other denominator to use.
    """
    if is_informed(task, request):
        return False
    length = task.profile.trajectory_length
    draws = keyed_uniforms(length, salt, request.variant_id, request.seed, "divergence")
    step = request.step_index
    return draws[step - 1] < commitment(task.profile, step / length)


def act(task: SimTask, request: AgentRequest, salt: str = "") -> ToolCall | Finish:
    """Next response of the simulated agent.

    Emits `trajectory_length` tool calls and then finishes. Divergence draws are keyed by
    `(salt, variant_id, seed)` and shared by every condition, so the same step diverges
    in the NC and injection trials of a cell unless the agent has been informed.

    Args:
        task (SimTask): Profile and oracle prompt of the variant.
        request (AgentRequest): Current request.
        salt (str, optional): Distinguishes independent simulated models. Defaults to "".

    Returns:
        ToolCall | Finish: The agent's response.
    """
    length = task.profile.trajectory_length
    step = request.step_index
    if step > length:
        return Finish(answer=FINAL_ANSWER)
    name = step_name(step, length)
    if is_divergent(task, request, salt):
        name += DIVERGENT_SUFFIX
    return ToolCall(name=name, arguments={"step": step}, result=f"{name} ok")


def grade_sim(trial: Trial, profile: CommitmentProfile, seed: int | None = None) -> bool:
    """Bernoulli draw with the analytic success probability of the trial's condition.

    The draw is keyed by `(model, variant_id, condition, seed)`, so grading the same trial
    twice gives the same answer and distinct models draw independently.
    """
    seed = trial.seed if seed is None else seed
    probability = success_probability(profile, trial.condition)
    generator = keyed_generator(trial.model, trial.variant_id, trial.condition.key, seed, "grade")
    return bool(generator.random() < probability)
