"""Forced-injection and natural-ask trial loops."""

import json
import logging
import time
from typing import Annotated

from pydantic import Field

from ..conditions import Condition, ConditionKind
from ..exceptions import AgentError, AgentTimeoutError, CalibrationError, GradingError
from ..gateway.grading import grade
from ..gateway.session import AgentHandle, exchange
from ..gateway.wire import (
    ASK_USER,
    ASK_USER_TOOL,
    AgentRequest,
    Finish,
    Message,
    RequestLimits,
    ToolCall,
    ToolDescriptor,
    Turn,
)
from ..pydantic_adapters import HarnessModel
from ..trial.models import Action, AskEvent, Protocol, TaskVariant, Trial, TrialStatus
from .budget import InjectionPlan
from .messages import (
    DEFAULT_TEMPLATES,
    TemplateTable,
    build_injection_message,
    with_natural_ask_notice,
)

logger = logging.getLogger(__name__)

EARLY_TERMINATION = "early-termination injection"


class TrialLimits(HarnessModel):
    """Per-trial guards; `attempts` counts transport retries per exchange."""

    max_actions: Annotated[int, Field(gt=0)] = 200
    attempts: Annotated[int, Field(gt=0)] = 1


def forced_tools(variant: TaskVariant) -> list[ToolDescriptor]:
    return [tool for tool in variant.tools if tool.name != ASK_USER]


def natural_tools(variant: TaskVariant) -> list[ToolDescriptor]:
    return [*forced_tools(variant), ASK_USER_TOOL]


class _TrialLoop:
    """State of one trial while the agent is acting."""

    def __init__(
        self,
        variant: TaskVariant,
        handle: AgentHandle,
        seed: int,
        prompt: str,
        tools: list[ToolDescriptor],
        limits: TrialLimits,
    ):
        self.variant = variant
        self.handle = handle
        self.seed = seed
        self.tools = tools
        self.limits = limits
        self.conversation: list[Turn] = [Turn(role="user", text=prompt)]
        self.actions: list[Action] = []
        self.ask_events: list[AskEvent] = []
        self.annotations: list[str] = []
        self.status = TrialStatus.COMPLETED
        self.final_answer: str | None = None
        self.injected_after: int | None = None

    def inject(self, message: str) -> None:
        self.conversation.append(Turn(role="user", text=message, synthetic=True))
        self.injected_after = len(self.actions)

    def run(self, plan: InjectionPlan | None, message: str | None) -> None:
        """Drives the agent until it finishes, fails or exhausts its action limit.

        With a plan, `message` is delivered as a user turn right after action
        `plan.inject_action` and before the agent is asked for the next one. In a
        natural session, `message` answers every `ask_user` call.
        """
        try:
            while True:
                if len(self.actions) >= self.limits.max_actions:
                    self.fail(f"action limit of {self.limits.max_actions} reached")
                    return
                step = len(self.actions) + 1
                request = AgentRequest(
                    variant_id=self.variant.variant_id,
                    seed=self.seed,
                    step_index=step,
                    limits=RequestLimits(
                        max_actions_remaining=self.limits.max_actions - len(self.actions)
                    ),
                    tools=self.tools,
                    conversation=list(self.conversation),
                )
                response = exchange(self.handle, request, attempts=self.limits.attempts)
                if isinstance(response, Finish):
                    self.final_answer = response.answer
                    self.conversation.append(Turn(role="assistant", text=response.answer))
                    return
                self.record(step, response, plan, message)
                if plan is not None and self.injected_after is None and step == plan.inject_action:
                    self.inject(message)  # type: ignore[arg-type]
        except AgentTimeoutError as err:
            self.fail(f"agent timeout: {err.message}")
        except AgentError as err:
            self.fail(f"{type(err).__name__}: {err.message}")

    def record(
        self,
        step: int,
        response: ToolCall | Message,
        plan: InjectionPlan | None,
        message: str | None,
    ) -> None:
        pre_injection = plan is not None and self.injected_after is None
        if isinstance(response, Message):
            self.conversation.append(Turn(role="assistant", text=response.text))
            self.actions.append(
                Action(
                    index=step,
                    name="message",
                    result=response.text,
                    is_pre_injection=pre_injection,
                )
            )
            return

        if response.name == ASK_USER:
            question = str(response.arguments.get("question", ""))
            result = message or ""
            self.ask_events.append(AskEvent(action_index=step, question=question))
        else:
            result = response.result or ""
        self.conversation.append(
            Turn(
                role="assistant",
                text=json.dumps(response.arguments, sort_keys=True),
                tool_name=response.name,
            )
        )
        self.conversation.append(Turn(role="tool", text=result, tool_name=response.name))
        self.actions.append(
            Action(
                index=step,
                name=response.name,
                parameters=response.arguments,
                result=result,
                is_pre_injection=pre_injection,
            )
        )

    def fail(self, annotation: str) -> None:
        self.status = TrialStatus.FAILED
        self.annotations.append(annotation)
        logger.warning(
            "Trial %s/%s seed %d failed: %s",
            self.handle.name,
            self.variant.variant_id,
            self.seed,
            annotation,
        )

    def finish(
        self,
        condition: Condition,
        protocol: Protocol,
        plan: InjectionPlan | None,
        started: float,
    ) -> Trial:
        if plan is None:
            injection_point = None
            pre = 0
        elif self.injected_after is None:
            injection_point = plan.inject_action
            pre = len(self.actions)
        else:
            injection_point = self.injected_after
            pre = self.injected_after

        trial = Trial(
            variant_id=self.variant.variant_id,
            model=self.handle.name,
            condition=condition,
            protocol=protocol,
            injection_point=injection_point,
            seed=self.seed,
            actions=self.actions,
            conversation=self.conversation,
            total_actions=len(self.actions),
            pre_injection_actions=pre,
            post_injection_actions=len(self.actions) - pre,
            ask_events=self.ask_events,
            status=self.status,
            annotations=self.annotations,
            final_answer=self.final_answer,
        )
        if self.status is TrialStatus.COMPLETED:
            trial = _graded(self.variant, trial)
        return trial.model_copy(update={"duration_seconds": time.perf_counter() - started})


def _graded(variant: TaskVariant, trial: Trial) -> Trial:
    try:
        success = grade(variant.grader, trial)
    except GradingError as err:
        logger.warning("Grading failed for %s/%s: %s", trial.model, trial.variant_id, err.message)
        return trial.model_copy(
            update={
                "status": TrialStatus.UNGRADED,
                "annotations": [*trial.annotations, f"grading error: {err.message}"],
            }
        )
    return trial.model_copy(update={"task_success": success})


def run_forced_trial(
    variant: TaskVariant,
    handle: AgentHandle,
    condition: Condition,
    seed: int,
    *,
    plan: InjectionPlan | None = None,
    limits: TrialLimits = TrialLimits(),
    templates: TemplateTable = DEFAULT_TEMPLATES,
) -> Trial:
    """Runs one forced-injection protocol trial.

    The oracle condition sends the oracle prompt; NC and injection conditions send the
    underspecified prompt. `ask_user` is never offered. For injection conditions the
    message is delivered after action `plan.inject_action`; if the agent finishes
    earlier, it is delivered after the finish and the trial is annotated
    "early-termination injection".

    Args:
        variant (TaskVariant): Variant to run.
        handle (AgentHandle): Open agent session.
        condition (Condition): Experimental condition.
        seed (int): Trial seed, forwarded to the agent.
        plan (InjectionPlan | None, optional): Required for injection conditions.
        limits (TrialLimits, optional): Action and retry limits.
        templates (TemplateTable, optional): Injection message templates.

    Returns:
        Trial: The graded trial, or a failed/ungraded one with annotations.

    Raises:
        CalibrationError: An injection condition was requested without a plan.
    """
    if condition.is_injection:
        if plan is None:
            raise CalibrationError(
                f"No calibrated budget for {handle.name}/{variant.variant_id}; "
                f"cannot run {condition.label}."
            )
        if plan.condition != condition:
            raise ValueError(f"Plan is for {plan.condition.label}, trial is {condition.label}.")
    else:
        plan = None

    started = time.perf_counter()
    if condition.kind is ConditionKind.ORACLE:
        prompt = variant.oracle_prompt
    else:
        prompt = variant.underspecified_prompt
    loop = _TrialLoop(variant, handle, seed, prompt, forced_tools(variant), limits)
    message = build_injection_message(variant.removed_segments, templates) if plan else None
    loop.run(plan, message)

    if plan is not None and loop.injected_after is None and loop.status is TrialStatus.COMPLETED:
        loop.inject(message)  # type: ignore[arg-type]
        loop.annotations.append(f"{EARLY_TERMINATION} (planned after action {plan.inject_action})")
    return loop.finish(condition, Protocol.FORCED, plan, started)


def run_natural_session(
    variant: TaskVariant,
    handle: AgentHandle,
    seed: int,
    *,
    limits: TrialLimits = TrialLimits(),
    templates: TemplateTable = DEFAULT_TEMPLATES,
) -> Trial:
    """Runs one natural-ask session.

    The underspecified prompt is suffixed with the auto-grader notice and `ask_user` is
    offered. Every ask is answered with the full injection message for the variant and
    recorded in `ask_events`.
    """
    started = time.perf_counter()
    prompt = with_natural_ask_notice(variant.underspecified_prompt)
    loop = _TrialLoop(variant, handle, seed, prompt, natural_tools(variant), limits)
    loop.run(None, build_injection_message(variant.removed_segments, templates))
    return loop.finish(Condition.no_clarification(), Protocol.NATURAL, None, started)
