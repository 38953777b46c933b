from pathlib import Path

import pytest
from pydantic import ValidationError

from clarify_timing.conditions import Condition
from clarify_timing.gateway import Finish, ProcessEndpoint, ScriptedEndpoint, SimulatorEndpoint
from clarify_timing.protocol import ExperimentConfig, run_experiment
from clarify_timing.sim.corpus import build_sim_corpus, default_document
from clarify_timing.trial import (
    Protocol,
    TrialStatus,
    load_manifest,
    load_trials,
    load_variants,
    trial_error_finder,
)
from clarify_timing.trial.archive import VARIANTS_FILE
from tests.factories import make_variant, tool_calls


def scripted(name: str = "scripted", steps: int = 5) -> ScriptedEndpoint:
    return ScriptedEndpoint(name=name, default_script=[*tool_calls(steps), Finish(answer="42")])


def without_durations(run_dir: Path) -> list[dict]:
    return [
        trial.model_dump(mode="json", exclude={"duration_seconds"})
        for trial in load_trials(run_dir)
    ]


def test_single_variant_grid(tmp_path: Path):
    config = ExperimentConfig(variants=[make_variant()], agents=[scripted()])
    result = run_experiment(config, tmp_path)

    assert result.trial_count == 21
    assert result.budgets == {"scripted": {"report-1": 5}}
    assert result.skipped_cells == []
    trials = load_trials(tmp_path)
    assert len(trials) == 21
    assert all(trial_error_finder(trial) == [] for trial in trials)
    assert [trial.condition.label for trial in trials[::3]] == [
        "Oracle",
        "Inj-10",
        "Inj-30",
        "Inj-50",
        "Inj-70",
        "Inj-90",
        "NC",
    ]
    assert [trial.seed for trial in trials[:3]] == [0, 1, 2]
    assert [t.injection_point for t in trials if t.condition == Condition.injection(0.9)] == [4] * 3


def test_grid_order_over_variants_and_agents(tmp_path: Path):
    config = ExperimentConfig(
        variants=[make_variant("v-1"), make_variant("v-2")],
        agents=[scripted("agent-a"), scripted("agent-b", steps=3)],
        parallelism=3,
    )
    result = run_experiment(config, tmp_path)

    assert result.trial_count == 84
    cells = [(t.variant_id, t.model) for t in load_trials(tmp_path)[::21]]
    assert cells == [("v-1", "agent-a"), ("v-1", "agent-b"), ("v-2", "agent-a"), ("v-2", "agent-b")]
    assert load_variants(tmp_path / VARIANTS_FILE) == config.variants


def test_sim_grid_is_reproducible(tmp_path: Path):
    variants = build_sim_corpus(default_document(1))
    serial = ExperimentConfig(variants=variants, agents=[SimulatorEndpoint()])
    parallel = serial.model_copy(update={"parallelism": 4})

    first = run_experiment(serial, tmp_path / "first")
    second = run_experiment(parallel, tmp_path / "second")

    assert first.trial_count == second.trial_count == 84
    assert without_durations(tmp_path / "first") == without_durations(tmp_path / "second")
    assert serial.config_hash() == parallel.config_hash()
    assert load_manifest(tmp_path / "first").config_hash == serial.config_hash()


def test_rerun_replaces_archive(tmp_path: Path):
    config = ExperimentConfig(variants=[make_variant()], agents=[scripted()], seeds=[0])
    run_experiment(config, tmp_path)
    run_experiment(config, tmp_path)
    assert len(load_trials(tmp_path)) == 7


def test_uncalibrated_cells_are_skipped(tmp_path: Path):
    config = ExperimentConfig(variants=[make_variant()], agents=[ScriptedEndpoint(name="quitter")])
    result = run_experiment(config, tmp_path)

    assert result.trial_count == 6
    assert result.budgets == {}
    assert len(result.skipped_cells) == 5
    assert {cell.condition for cell in result.skipped_cells} == {
        Condition.injection(f).key for f in (0.1, 0.3, 0.5, 0.7, 0.9)
    }
    assert load_manifest(tmp_path).skipped_cells == result.skipped_cells


def test_unreachable_agent_fails_its_cells(tmp_path: Path):
    ghost = ProcessEndpoint(name="ghost", command=[str(tmp_path / "no-such-agent")])
    config = ExperimentConfig(variants=[make_variant()], agents=[ghost], seeds=[0, 1])
    result = run_experiment(config, tmp_path / "run")

    trials = load_trials(tmp_path / "run")
    assert len(trials) == 4
    assert all(trial.status is TrialStatus.FAILED for trial in trials)
    assert trials[0].annotations[0].startswith("session failed: AgentTransportError")
    assert result.failed_cells == [
        f"report-1|ghost|{Condition.oracle().key}",
        f"report-1|ghost|{Condition.no_clarification().key}",
    ]
    assert len(result.skipped_cells) == 5


def test_natural_grid(tmp_path: Path):
    config = ExperimentConfig(
        variants=[make_variant("v-1"), make_variant("v-2")],
        agents=[scripted()],
        protocol=Protocol.NATURAL,
    )
    result = run_experiment(config, tmp_path)

    assert result.trial_count == 6
    trials = load_trials(tmp_path)
    assert all(trial.protocol is Protocol.NATURAL for trial in trials)
    assert all(trial.condition == Condition.no_clarification() for trial in trials)
    assert load_manifest(tmp_path).conditions == [Condition.no_clarification().key]


def test_on_cell_callback(tmp_path: Path):
    seen = []
    config = ExperimentConfig(variants=[make_variant()], agents=[scripted()], seeds=[4, 5])
    run_experiment(config, tmp_path, on_cell=lambda key, trials: seen.append((key, len(trials))))

    assert len(seen) == 7
    assert seen[0] == (("report-1", "scripted", Condition.oracle().key), 2)


@pytest.mark.parametrize(
    ("update", "message"),
    [
        ({"agents": [scripted("a"), scripted("a")]}, "agent names must be unique"),
        ({"conditions": [Condition.oracle(), Condition.oracle()]}, "conditions must be distinct"),
        ({"seeds": [1, 1]}, "seeds must be distinct"),
        ({"conditions": [Condition.injection(0.5)]}, "need the oracle condition"),
        ({"seeds": []}, "at least 1 item"),
        ({"parallelism": 0}, "greater than 0"),
    ],
)
def test_config_validation(update, message):
    base = {"variants": [make_variant()], "agents": [scripted()]}
    with pytest.raises(ValidationError, match=message):
        ExperimentConfig(**{**base, **update})


def test_natural_config_ignores_injection_conditions():
    config = ExperimentConfig(
        variants=[make_variant()],
        agents=[scripted()],
        protocol=Protocol.NATURAL,
        conditions=[Condition.injection(0.5)],
    )
    assert config.grid_conditions == [Condition.no_clarification()]
