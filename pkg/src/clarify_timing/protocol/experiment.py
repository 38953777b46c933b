"""Experiment grid: oracle calibration first, then every remaining cell."""

import hashlib
import logging
from collections.abc import Callable, Iterator
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Annotated

import httpx
from pydantic import Field, model_validator

from .. import __version__
from ..conditions import ALL_CONDITIONS, Condition, ConditionKind
from ..exceptions import AgentError
from ..gateway.endpoints import EndpointSpec, SimulatorEndpoint
from ..gateway.session import open_session
from ..gateway.wire import PROTOCOL_VERSION
from ..pydantic_adapters import HarnessModel
from ..sim.corpus import attach_tasks, sim_tasks
from ..trial.archive import (
    RunArchive,
    RunManifest,
    SkippedCell,
    write_manifest,
    write_variants,
)
from ..trial.models import Protocol, TaskVariant, Trial, TrialStatus
from .budget import Budget, InjectionPlan, calibrate_budget, plan_injection
from .messages import DEFAULT_TEMPLATES, TemplateTable
from .runner import TrialLimits, run_forced_trial, run_natural_session

logger = logging.getLogger(__name__)

CellKey = tuple[str, str, str]
"""`(variant_id, model, condition key)`."""


class ExperimentConfig(HarnessModel):
    """Fully resolved experiment: variants and endpoints are objects, not paths."""

    variants: Annotated[list[TaskVariant], Field(min_length=1)]
    agents: Annotated[list[EndpointSpec], Field(min_length=1)]
    protocol: Protocol = Protocol.FORCED
    conditions: Annotated[list[Condition], Field(min_length=1)] = list(ALL_CONDITIONS)
    seeds: Annotated[list[int], Field(min_length=1)] = [0, 1, 2]
    parallelism: Annotated[int, Field(gt=0)] = 1
    limits: TrialLimits = TrialLimits()
    templates: TemplateTable = DEFAULT_TEMPLATES
    stats_seed: int = 0

    @model_validator(mode="after")
    def _grid_is_runnable(self) -> "ExperimentConfig":
        names = [agent.name for agent in self.agents]
        if len(set(names)) != len(names):
            raise ValueError(f"agent names must be unique, got {names}")
        if len({condition.key for condition in self.conditions}) != len(self.conditions):
            raise ValueError("conditions must be distinct")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        if self.protocol is Protocol.FORCED and any(c.is_injection for c in self.conditions):
            if Condition.oracle() not in self.conditions:
                raise ValueError("injection conditions need the oracle condition for calibration")
        return self

    @property
    def grid_conditions(self) -> list[Condition]:
        """Conditions in table order; natural runs have the single NC-shaped session cell."""
        if self.protocol is Protocol.NATURAL:
            return [Condition.no_clarification()]
        order = {condition.key: position for position, condition in enumerate(ALL_CONDITIONS)}
        return sorted(self.conditions, key=lambda condition: order[condition.key])

    def config_hash(self) -> str:
        """Hash of everything that determines the archive; parallelism is excluded."""
        payload = self.model_dump_json(exclude={"parallelism"})
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class RunResult(HarnessModel):
    run_dir: Path
    trial_count: int
    failed_cells: list[str] = []
    skipped_cells: list[SkippedCell] = []
    budgets: dict[str, dict[str, int]] = {}


class _Cell(HarnessModel):
    variant: TaskVariant
    agent: EndpointSpec
    condition: Condition
    plan: InjectionPlan | None = None

    @property
    def key(self) -> CellKey:
        return (self.variant.variant_id, self.agent.name, self.condition.key)


def _resolved_agents(config: ExperimentConfig) -> list[EndpointSpec]:
    tasks = sim_tasks(config.variants)
    return [
        attach_tasks(agent, tasks) if isinstance(agent, SimulatorEndpoint) else agent
        for agent in config.agents
    ]


def _run_cell(
    cell: _Cell,
    config: ExperimentConfig,
    http_transport: httpx.BaseTransport | None,
) -> list[Trial]:
    """Runs one cell's trials in seed order on a dedicated session."""
    try:
        handle = open_session(cell.agent, http_transport=http_transport)
    except AgentError as err:
        logger.error("Cannot open session with %s: %s", cell.agent.name, err.message)
        return [_unreachable_trial(cell, seed, err, config.protocol) for seed in config.seeds]

    with handle:
        if config.protocol is Protocol.NATURAL:
            return [
                run_natural_session(
                    cell.variant,
                    handle,
                    seed,
                    limits=config.limits,
                    templates=config.templates,
                )
                for seed in config.seeds
            ]
        return [
            run_forced_trial(
                cell.variant,
                handle,
                cell.condition,
                seed,
                plan=cell.plan,
                limits=config.limits,
                templates=config.templates,
            )
            for seed in config.seeds
        ]


def _unreachable_trial(cell: _Cell, seed: int, err: AgentError, protocol: Protocol) -> Trial:
    return Trial(
        variant_id=cell.variant.variant_id,
        model=cell.agent.name,
        condition=cell.condition,
        protocol=protocol,
        injection_point=cell.plan.inject_action if cell.plan is not None else None,
        seed=seed,
        total_actions=0,
        pre_injection_actions=0,
        post_injection_actions=0,
        status=TrialStatus.FAILED,
        annotations=[f"session failed: {type(err).__name__}: {err.message}"],
    )


class ExperimentRunner:
    """Executes an `ExperimentConfig` into a run directory.

    Cells are independent and run on a thread pool; within a cell, trials run in seed
    order. The archive is written in grid order (variant, agent, condition, seed)
    whatever the completion order, so parallelism never changes it.
    """

    def __init__(
        self,
        config: ExperimentConfig,
        run_dir: Path,
        *,
        http_transport: httpx.BaseTransport | None = None,
        on_cell: Callable[[CellKey, list[Trial]], None] | None = None,
    ):
        self.config = config
        self.run_dir = Path(run_dir)
        self.http_transport = http_transport
        self.on_cell = on_cell
        self.agents = _resolved_agents(config)
        self.results: dict[CellKey, list[Trial]] = {}
        self.budgets: dict[str, dict[str, int]] = {}
        self.skipped: list[SkippedCell] = []

    def _cells(self, kinds: set[ConditionKind]) -> Iterator[_Cell]:
        for variant in self.config.variants:
            for agent in self.agents:
                for condition in self.config.grid_conditions:
                    if condition.kind in kinds:
                        yield _Cell(variant=variant, agent=agent, condition=condition)

    def _execute(self, cells: list[_Cell]) -> None:
        with ThreadPoolExecutor(max_workers=self.config.parallelism) as pool:
            futures = {
                cell.key: pool.submit(_run_cell, cell, self.config, self.http_transport)
                for cell in cells
            }
            for key, future in futures.items():
                trials = future.result()
                self.results[key] = trials
                self._log_cell(key, trials)

    def _log_cell(self, key: CellKey, trials: list[Trial]) -> None:
        variant_id, model, condition_key = key
        successes = sum(trial.task_success for trial in trials)
        failures = sum(trial.status is TrialStatus.FAILED for trial in trials)
        logger.info(
            "%s | %s | %s: %d/%d succeeded%s",
            variant_id,
            model,
            Condition.from_key(condition_key).label,
            successes,
            len(trials),
            f" ({failures} failed)" if failures else "",
        )
        if self.on_cell is not None:
            self.on_cell(key, trials)

    def _calibrate(self) -> list[_Cell]:
        """Budgets from the oracle cells; returns the injection cells that can run."""
        runnable = []
        for cell in self._cells({ConditionKind.INJECTION}):
            variant_id, model = cell.variant.variant_id, cell.agent.name
            budget = self.budgets.get(model, {}).get(variant_id)
            if budget is None:
                self._skip(cell)
                continue
            runnable.append(
                cell.model_copy(
                    update={
                        "plan": plan_injection(
                            cell.condition,
                            Budget(model=model, variant_id=variant_id, value=budget),
                        )
                    }
                )
            )
        return runnable

    def _record_budgets(self) -> None:
        for (variant_id, model, condition_key), trials in self.results.items():
            if condition_key != ConditionKind.ORACLE.value:
                continue
            lengths = [t.total_actions for t in trials if t.status is not TrialStatus.FAILED]
            lengths = [length for length in lengths if length > 0]
            if lengths:
                self.budgets.setdefault(model, {})[variant_id] = calibrate_budget(lengths)
            else:
                logger.warning(
                    "No terminated oracle trial for %s/%s; uncalibrated", model, variant_id
                )

    def _skip(self, cell: _Cell) -> None:
        reason = "uncalibrated budget: no oracle trial terminated"
        self.skipped.append(
            SkippedCell(
                model=cell.agent.name,
                variant_id=cell.variant.variant_id,
                condition=cell.condition.key,
                reason=reason,
            )
        )
        logger.warning(
            "Skipping %s | %s | %s: %s",
            cell.variant.variant_id,
            cell.agent.name,
            cell.condition.label,
            reason,
        )

    def run(self) -> RunResult:
        config = self.config
        self.run_dir.mkdir(parents=True, exist_ok=True)
        write_variants(self.run_dir, config.variants)

        if config.protocol is Protocol.NATURAL:
            self._execute(list(self._cells({ConditionKind.NO_CLARIFICATION})))
        else:
            self._execute(list(self._cells({ConditionKind.ORACLE})))
            self._record_budgets()
            rest = [*self._cells({ConditionKind.NO_CLARIFICATION}), *self._calibrate()]
            self._execute(rest)

        failed_cells = []
        count = 0
        with RunArchive(self.run_dir, fresh=True) as archive:
            for cell in self._cells(set(ConditionKind)):
                trials = self.results.get(cell.key)
                if trials is None:
                    continue
                for trial in trials:
                    archive.append(trial)
                    count += 1
                if all(trial.status is TrialStatus.FAILED for trial in trials):
                    failed_cells.append("|".join(cell.key))

        manifest = RunManifest(
            harness_version=__version__,
            wire_version=PROTOCOL_VERSION,
            config_hash=config.config_hash(),
            protocol=config.protocol,
            agents=[agent.name for agent in self.agents],
            variant_ids=[variant.variant_id for variant in config.variants],
            conditions=[condition.key for condition in config.grid_conditions],
            seeds=config.seeds,
            budgets=self.budgets,
            skipped_cells=self.skipped,
            failed_cells=failed_cells,
            stats_seed=config.stats_seed,
        )
        write_manifest(self.run_dir, manifest)
        logger.info("Wrote %d trials to %s", count, self.run_dir)
        return RunResult(
            run_dir=self.run_dir,
            trial_count=count,
            failed_cells=failed_cells,
            skipped_cells=self.skipped,
            budgets=self.budgets,
        )


def run_experiment(
    config: ExperimentConfig,
    run_dir: Path,
    *,
    http_transport: httpx.BaseTransport | None = None,
    on_cell: Callable[[CellKey, list[Trial]], None] | None = None,
) -> RunResult:
    """Executes the full grid and writes `trials.jsonl`, `manifest.json` and `variants.json`.

    Args:
        config (ExperimentConfig): Resolved experiment.
        run_dir (Path): Output directory; an existing archive there is replaced.
        http_transport (httpx.BaseTransport | None, optional): Transport for HTTP agents.
        on_cell (Callable | None, optional): Called with each finished cell's trials.

    Returns:
        RunResult: Counts, budgets, skipped and wholly failed cells.
    """
    return ExperimentRunner(
        config, run_dir, http_transport=http_transport, on_cell=on_cell
    ).run()
