"""Run configuration documents and their resolution into an `ExperimentConfig`."""

import json
import logging
import os
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Annotated, Literal

from pydantic import Field, ValidationError, field_validator, model_validator

from ..conditions import ALL_CONDITIONS, Condition
from ..exceptions import ConfigError, describe_validation_error
from ..gateway.endpoints import EndpointSpec, SimulatorEndpoint
from ..protocol.experiment import ExperimentConfig
from ..protocol.messages import DEFAULT_TEMPLATES, TemplateTable
from ..protocol.runner import TrialLimits
from ..pydantic_adapters import HarnessModel
from ..sim.corpus import build_sim_corpus
from ..sim.profiles import ProfileDocument
from ..trial.archive import load_variants
from ..trial.models import Protocol, TaskVariant

logger = logging.getLogger(__name__)

OUT_ENV = "CLARIFY_TIMING_OUT"
PARALLELISM_ENV = "CLARIFY_TIMING_PARALLELISM"
DEFAULT_SEEDS = (0, 1, 2)

RunMode = Literal["forced", "natural", "simulate"]


class RunConfig(HarnessModel):
    """The `run` subcommand's config document.

    `simulate` runs the forced protocol on a corpus generated from `profiles`; the
    agent list defaults to one built-in simulator. Seeds default to `0 .. n-1` for
    `trials_per_cell = n`, and to `[0, 1, 2]` when neither is given.
    """

    mode: RunMode = "forced"
    variants: Path | None = None
    profiles: Path | None = None
    agents: list[EndpointSpec] = []
    conditions: Annotated[list[str], Field(min_length=1)] = [c.key for c in ALL_CONDITIONS]
    trials_per_cell: Annotated[int, Field(gt=0)] | None = None
    seeds: list[int] | None = None
    output_dir: Path = Path("runs/latest")
    parallelism: Annotated[int, Field(gt=0)] = 1
    limits: TrialLimits = TrialLimits()
    templates: TemplateTable = DEFAULT_TEMPLATES
    stats_seed: int = 0

    @field_validator("conditions")
    @classmethod
    def _known_conditions(cls, keys: list[str]) -> list[str]:
        for key in keys:
            Condition.from_key(key)
        return keys

    @model_validator(mode="after")
    def _mode_inputs(self) -> "RunConfig":
        if self.mode == "simulate":
            if self.profiles is None:
                raise ValueError("simulate mode requires `profiles` (a profile document path)")
        else:
            if self.variants is None:
                raise ValueError(f"{self.mode} mode requires `variants` (a corpus path)")
            if not self.agents:
                raise ValueError(f"{self.mode} mode requires at least one agent")
        if (
            self.seeds is not None
            and self.trials_per_cell is not None
            and len(self.seeds) != self.trials_per_cell
        ):
            raise ValueError(
                f"{len(self.seeds)} seeds given for trials_per_cell = {self.trials_per_cell}"
            )
        return self

    @property
    def resolved_seeds(self) -> list[int]:
        if self.seeds is not None:
            return list(self.seeds)
        if self.trials_per_cell is not None:
            return list(range(self.trials_per_cell))
        return list(DEFAULT_SEEDS)

    @property
    def protocol(self) -> Protocol:
        return Protocol.NATURAL if self.mode == "natural" else Protocol.FORCED


class TrialSelector(HarnessModel):
    """`--filter` selections; an empty selection keeps everything."""

    variants: frozenset[str] = frozenset()
    models: frozenset[str] = frozenset()
    conditions: frozenset[str] = frozenset()

    @classmethod
    def parse(cls, expressions: Sequence[str]) -> "TrialSelector":
        """Parses `variant=a,b`, `model=x` and `condition=oracle,injection:0.3` expressions.

        Raises:
            ConfigError: An expression has no `=`, an unknown key or an unknown condition.
        """
        selected: dict[str, set[str]] = {"variant": set(), "model": set(), "condition": set()}
        problems = []
        for expression in expressions:
            key, sep, values = expression.partition("=")
            key = key.strip()
            if not sep or key not in selected:
                problems.append(
                    f"filter: expected variant=, model= or condition=, got {expression!r}"
                )
                continue
            for value in filter(None, (item.strip() for item in values.split(","))):
                if key == "condition":
                    try:
                        value = Condition.from_key(value).key
                    except ValueError as err:
                        problems.append(f"filter.condition: {err}")
                        continue
                selected[key].add(value)
        if problems:
            raise ConfigError(problems)
        return cls(
            variants=frozenset(selected["variant"]),
            models=frozenset(selected["model"]),
            conditions=frozenset(selected["condition"]),
        )

    def __call__(self, variant_id: str, model: str, condition: Condition) -> bool:
        return (
            (not self.variants or variant_id in self.variants)
            and (not self.models or model in self.models)
            and (not self.conditions or condition.key in self.conditions)
        )


def _resolve_path(base: Path, value: Path | None) -> Path | None:
    if value is None or value.is_absolute():
        return value
    return base / value


def load_run_config(
    path: Path,
    *,
    out: Path | None = None,
    parallelism: int | None = None,
    seeds: Sequence[int] | None = None,
    env: Mapping[str, str] | None = None,
) -> RunConfig:
    """Reads a run config and applies overrides.

    Relative paths resolve against the config file's directory. The output directory
    and parallelism come from the flag, else the environment (`CLARIFY_TIMING_OUT`,
    `CLARIFY_TIMING_PARALLELISM`), else the file. `seeds` (from `--seed-list`) replaces
    the file's seeds.

    Raises:
        ConfigError: The file is missing or invalid; one `field.path: message` per problem.
    """
    env = os.environ if env is None else env
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as err:
        raise ConfigError([f"config: file not found: {path}"]) from err
    except json.JSONDecodeError as err:
        raise ConfigError([f"config: line {err.lineno}: {err.msg}"]) from err
    if not isinstance(document, dict):
        raise ConfigError(["config: expected a JSON object"])

    if seeds is not None:
        document["seeds"] = list(seeds)
        document.pop("trials_per_cell", None)
    if out is None and env.get(OUT_ENV):
        out = Path(env[OUT_ENV])
    if out is not None:
        document["output_dir"] = str(out)
    if parallelism is None and env.get(PARALLELISM_ENV):
        try:
            parallelism = int(env[PARALLELISM_ENV])
        except ValueError as err:
            problem = f"{PARALLELISM_ENV}: not an integer: {env[PARALLELISM_ENV]!r}"
            raise ConfigError([problem]) from err
    if parallelism is not None:
        document["parallelism"] = parallelism

    try:
        config = RunConfig.model_validate(document)
    except ValidationError as err:
        raise ConfigError(describe_validation_error(err)) from err

    base = path.parent
    output_dir = config.output_dir if out is not None else _resolve_path(base, config.output_dir)
    return config.model_copy(
        update={
            "variants": _resolve_path(base, config.variants),
            "profiles": _resolve_path(base, config.profiles),
            "output_dir": output_dir,
        }
    )


def _load_profiles(path: Path) -> ProfileDocument:
    if not path.is_file():
        raise ConfigError([f"profiles: file not found: {path}"])
    try:
        return ProfileDocument.model_validate_json(path.read_bytes())
    except ValidationError as err:
        problems = [f"profiles.{problem}" for problem in describe_validation_error(err)]
        raise ConfigError(problems) from err


def _select(
    variants: list[TaskVariant],
    agents: list[EndpointSpec],
    conditions: list[Condition],
    selector: TrialSelector,
) -> tuple[list[TaskVariant], list[EndpointSpec], list[Condition]]:
    if selector.variants:
        variants = [variant for variant in variants if variant.variant_id in selector.variants]
    if selector.models:
        agents = [agent for agent in agents if agent.name in selector.models]
    if selector.conditions:
        conditions = [condition for condition in conditions if condition.key in selector.conditions]
    problems = [
        f"filter: no {name} left after filtering"
        for name, items in (("variant", variants), ("agent", agents), ("condition", conditions))
        if not items
    ]
    if problems:
        raise ConfigError(problems)
    return variants, agents, conditions


def resolve_experiment(
    config: RunConfig, selector: TrialSelector | None = None
) -> ExperimentConfig:
    """Loads the corpus (or generates it in simulate mode) and builds the engine config.

    Nothing is written; every problem surfaces as a `ConfigError` before a run starts.
    """
    if config.mode == "simulate":
        variants = build_sim_corpus(_load_profiles(config.profiles))  # type: ignore[arg-type]
        agents = list(config.agents) or [SimulatorEndpoint()]
    else:
        variants = load_variants(config.variants)  # type: ignore[arg-type]
        agents = list(config.agents)
    conditions = [Condition.from_key(key) for key in config.conditions]
    selector = selector or TrialSelector()
    variants, agents, conditions = _select(variants, agents, conditions, selector)

    try:
        return ExperimentConfig(
            variants=variants,
            agents=agents,
            protocol=config.protocol,
            conditions=conditions,
            seeds=config.resolved_seeds,
            parallelism=config.parallelism,
            limits=config.limits,
            templates=config.templates,
            stats_seed=config.stats_seed,
        )
    except ValidationError as err:
        raise ConfigError(describe_validation_error(err)) from err
