"""Budget calibration, injection scheduling, message construction and trial loops."""

from .budget import Budget, InjectionPlan, calibrate_budget, injection_action, plan_injection
from .experiment import ExperimentConfig, ExperimentRunner, RunResult, run_experiment
from .messages import (
    DEFAULT_TEMPLATES,
    NATURAL_ASK_NOTICE,
    TemplateEntry,
    TemplateTable,
    build_injection_message,
)
from .runner import TrialLimits, run_forced_trial, run_natural_session

__all__ = [
    "DEFAULT_TEMPLATES",
    "NATURAL_ASK_NOTICE",
    "Budget",
    "ExperimentConfig",
    "ExperimentRunner",
    "InjectionPlan",
    "RunResult",
    "TemplateEntry",
    "TemplateTable",
    "TrialLimits",
    "build_injection_message",
    "calibrate_budget",
    "injection_action",
    "plan_injection",
    "run_experiment",
    "run_forced_trial",
    "run_natural_session",
]
