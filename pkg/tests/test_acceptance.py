"""End-to-end checks against closed forms, brute-force oracles and golden values."""

import itertools
import math
from collections import defaultdict
from decimal import Decimal
from fractions import Fraction
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from clarify_timing.analysis import (
    AnalysisSettings,
    analyze_run,
    ask_stats,
    cell_summaries,
    pass_at_k,
    pass_at_k_exact,
    permutation_test,
    point_of_no_return,
    select_oracle_trace,
    tau_b,
    wasted_compute,
)
from clarify_timing.analysis.tables import FINDINGS_FILE
from clarify_timing.cli.commands import cmd_analyze, cmd_run
from clarify_timing.cli.config import RunConfig
from clarify_timing.conditions import (
    ALL_CONDITIONS,
    INJECTION_FRACTIONS,
    Condition,
    Dimension,
)
from clarify_timing.gateway import ScriptedEndpoint, SimulatorEndpoint, ToolCall
from clarify_timing.protocol import ExperimentConfig, build_injection_message, run_experiment
from clarify_timing.protocol.budget import injection_action
from clarify_timing.sim import CommitmentShape, ProfileSpec
from clarify_timing.sim.corpus import default_document, sim_variants
from clarify_timing.trial import Action, Protocol, RemovedSegment
from clarify_timing.trial.archive import load_manifest, load_trials
from tests.factories import make_trial, make_variant, tool_calls

GOAL_SPEC = ProfileSpec(
    name="goal",
    dimension=Dimension.GOAL,
    shape=CommitmentShape.CONCAVE,
    parameters={"exponent": 0.35},
    anchors={"p_oracle": 0.80, "p_nc": 0.40},
    variants=500,
)
INPUT_SPEC = ProfileSpec(
    name="input",
    dimension=Dimension.INPUT,
    shape=CommitmentShape.LINEAR,
    anchors={"p_oracle": 0.57, "p_nc": 0.33},
    variants=500,
)


def test_pass_at_k_matches_enumeration():
    assert pass_at_k(4, 1, 3) == 0.75
    for n in range(1, 7):
        for c in range(n + 1):
            for k in range(1, n + 1):
                subsets = list(itertools.combinations(range(n), k))
                passing = sum(min(subset) < c for subset in subsets)
                assert pass_at_k_exact(n, c, k) == Fraction(passing, len(subsets))


def test_monte_carlo_permutation_matches_exact():
    values = [0.91, 0.15, 0.62, 0.48, 0.77, 0.05, 0.33, 0.84]
    for n_a in range(1, 5):
        for n_b in range(1, 5):
            a, b = values[:n_a], values[4 : 4 + n_b]
            exact = permutation_test(a, b, exact=True)
            sampled = permutation_test(a, b, n_perm=10_000, seed=n_a * 10 + n_b, exact=False)
            assert sampled.p_value == pytest.approx(exact.p_value, abs=0.02), (n_a, n_b)
    assert permutation_test([1, 1, 1], [0, 0, 0], exact=True).p_value == pytest.approx(0.05)


def brute_force_tau_b(x: np.ndarray, y: np.ndarray) -> float:
    concordant = discordant = tied_x = tied_y = 0
    for i, j in itertools.combinations(range(len(x)), 2):
        dx, dy = np.sign(x[j] - x[i]), np.sign(y[j] - y[i])
        tied_x += dx == 0
        tied_y += dy == 0
        concordant += dx * dy > 0
        discordant += dx * dy < 0
    pairs = len(x) * (len(x) - 1) // 2
    if tied_x == pairs or tied_y == pairs:
        return math.nan
    return (concordant - discordant) / math.sqrt((pairs - tied_x) * (pairs - tied_y))


def test_tau_b_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(200):
        length = int(rng.integers(2, 51))
        x, y = rng.integers(0, 4, length), rng.integers(0, 4, length)
        expected, actual = brute_force_tau_b(x, y), tau_b(x.tolist(), y.tolist())
        if math.isnan(expected):
            assert math.isnan(actual)
        else:
            assert actual == pytest.approx(expected, abs=1e-12)
    ordered = list(range(9))
    assert tau_b(ordered, ordered) == 1.0
    assert tau_b(ordered, ordered[::-1]) == -1.0


@pytest.mark.parametrize(
    ("budget", "fraction", "action"),
    [
        (20, "0.1", 2),
        (49, "0.7", 34),
        (6, "0.1", 1),
        *((1, str(fraction), 1) for fraction in INJECTION_FRACTIONS),
    ],
)
def test_injection_action_golden(budget, fraction, action):
    assert injection_action(budget, Decimal(fraction)) == action


def test_injection_message_golden():
    single = [RemovedSegment(dimension=Dimension.GOAL, subdimension="format", value="CSV format")]
    assert build_injection_message(single) == (
        "By the way, please give me the result in CSV format."
    )
    pair = [
        RemovedSegment(
            dimension=Dimension.CONSTRAINT, subdimension="temporal", value="last month of 2022"
        ),
        RemovedSegment(dimension=Dimension.CONSTRAINT, subdimension="selection", value="0.50"),
    ]
    assert build_injection_message(pair) == (
        "By the way, I should have mentioned: I'm looking at last month of 2022. Also, 0.50."
    )


def mean_pass_at_3_by_condition(trials) -> dict[str, float]:
    by_condition = defaultdict(list)
    for cell in cell_summaries(trials, k=3):
        by_condition[cell.condition.key].append(cell.pass_at_k)
    return {key: float(np.mean(values)) for key, values in by_condition.items()}


def test_goal_simulation_matches_closed_form(tmp_path: Path):
    config = ExperimentConfig(variants=sim_variants(GOAL_SPEC), agents=[SimulatorEndpoint()])
    run_experiment(config, tmp_path)
    measured = mean_pass_at_3_by_condition(load_trials(tmp_path))

    for fraction in INJECTION_FRACTIONS:
        p = 0.40 + 0.40 * (1 - float(fraction) ** 0.35)
        expected = 1 - (1 - p) ** 3
        key = Condition.injection(fraction).key
        assert measured[key] == pytest.approx(expected, abs=0.04), key
    assert measured[Condition.oracle().key] == pytest.approx(1 - 0.2**3, abs=0.04)
    assert measured[Condition.no_clarification().key] == pytest.approx(1 - 0.6**3, abs=0.04)


FRONT_LOADING_CONDITIONS = [
    Condition.oracle(),
    Condition.injection(Decimal("0.1")),
    Condition.injection(Decimal("0.5")),
    Condition.no_clarification(),
]


def gap_lost_findings(run_dir: Path, out_dir: Path) -> dict[tuple[str, str], float]:
    analyze_run(run_dir, out_dir, AnalysisSettings(k=1, n_perm=100))
    findings = pd.read_csv(out_dir / FINDINGS_FILE, dtype=str, keep_default_na=False)
    return {
        (row.finding, row.scope): float(row.value)
        for row in findings.itertuples(index=False)
        if row.finding.startswith("gap_lost")
    }


@pytest.mark.parametrize("seeds", [(0, 1, 2), (3, 4, 5), (6, 7, 8)])
def test_goal_value_is_more_front_loaded_than_input(seeds, tmp_path: Path):
    config = ExperimentConfig(
        variants=[*sim_variants(GOAL_SPEC), *sim_variants(INPUT_SPEC)],
        agents=[SimulatorEndpoint()],
        conditions=FRONT_LOADING_CONDITIONS,
        seeds=list(seeds),
    )
    run_experiment(config, tmp_path / "run")
    gap_lost = gap_lost_findings(tmp_path / "run", tmp_path / "analysis")

    # share of the oracle-NC gap gone by each injection point, on the pass@1 curves
    for finding in ("gap_lost_inj10", "gap_lost_inj50"):
        assert gap_lost[finding, "sim/goal"] > gap_lost[finding, "sim/input"], finding


def test_point_of_no_return_recovery():
    base = [0.2 + 0.01 * j for j in range(20)]
    early = {Decimal("0.1"), Decimal("0.3")}
    injection = {
        fraction: [value + 0.5 for value in base] if fraction in early else list(base)
        for fraction in INJECTION_FRACTIONS
    }
    result = point_of_no_return(injection, base, alpha=0.05)
    assert result.fraction == Decimal("0.3")
    assert result.threshold == pytest.approx(0.05 / 5)


def test_wasted_compute_fixture():
    oracle = [
        Action(index=index, name=name)
        for index, name in enumerate(["search", "open", "open", "write_file", "verify"], 1)
    ]
    names = ["search", "browse", "open", "delete", "write_file", "verify"]
    actions = [
        Action(index=index, name=name, is_pre_injection=index <= 5)
        for index, name in enumerate(names, start=1)
    ]
    trial = make_trial(condition=Condition.injection(0.5), actions=actions, pre=5)
    assert wasted_compute(trial, oracle) == 0.4


def test_wasted_compute_grows_with_injection_time(tmp_path: Path):
    spec = ProfileSpec(
        name="linear",
        dimension=Dimension.INPUT,
        shape=CommitmentShape.LINEAR,
        anchors={"p_oracle": 0.6, "p_nc": 0.3},
        variants=60,
    )
    config = ExperimentConfig(variants=sim_variants(spec), agents=[SimulatorEndpoint()])
    run_experiment(config, tmp_path)
    trials = load_trials(tmp_path)

    oracle_traces = {
        variant_id: select_oracle_trace(t for t in trials if t.variant_id == variant_id)
        for variant_id in {trial.variant_id for trial in trials}
    }
    wasted = defaultdict(list)
    for trial in trials:
        if trial.condition.is_injection:
            wasted[trial.condition.fraction].append(
                wasted_compute(trial, oracle_traces[trial.variant_id])
            )
    means = [float(np.mean(wasted[fraction])) for fraction in INJECTION_FRACTIONS]
    assert means == sorted(means)
    assert means[-1] > means[0]


def test_natural_ask_bookkeeping(tmp_path: Path):
    asking = tool_calls(7)
    asking[2] = ToolCall(name="ask_user", arguments={"question": "Which format?"})
    variants = [make_variant(f"v-{number:03d}") for number in range(100)]
    agent = ScriptedEndpoint(
        name="asker",
        scripts={variant.variant_id: asking for variant in variants[:52]},
        default_script=tool_calls(7),
    )
    config = ExperimentConfig(
        variants=variants, agents=[agent], protocol=Protocol.NATURAL, seeds=[0]
    )
    run_experiment(config, tmp_path)

    summary = ask_stats(load_trials(tmp_path))
    assert summary.sessions == 100
    assert summary.ask_rate == 0.52
    assert summary.mean_first_timing == 3 / 7
    assert summary.median_first_timing == 3 / 7

    silent = ScriptedEndpoint(name="silent", default_script=tool_calls(7))
    config = ExperimentConfig(
        variants=variants[:10], agents=[silent], protocol=Protocol.NATURAL, seeds=[0]
    )
    run_experiment(config, tmp_path / "silent")
    summary = ask_stats(load_trials(tmp_path / "silent"))
    assert summary.ask_rate == 0.0
    assert summary.mean_first_timing is None


def test_runs_and_analyses_are_reproducible(tmp_path: Path):
    profiles = tmp_path / "profiles.json"
    profiles.write_text(default_document(2).model_dump_json(), encoding="utf-8")
    runs = [tmp_path / "first", tmp_path / "second"]
    for run_dir in runs:
        cmd_run(RunConfig(mode="simulate", profiles=profiles, output_dir=run_dir, parallelism=2))

    first, second = (load_trials(run_dir) for run_dir in runs)
    assert len(first) == 8 * len(ALL_CONDITIONS) * 3
    assert [trial.model_dump(exclude={"duration_seconds"}) for trial in first] == [
        trial.model_dump(exclude={"duration_seconds"}) for trial in second
    ]
    assert load_manifest(runs[0]) == load_manifest(runs[1])

    analyses = [cmd_analyze(run_dir, tmp_path / f"analysis-{run_dir.name}") for run_dir in runs]
    again = analyze_run(runs[0], tmp_path / "analysis-again")
    for name, path in analyses[0].files.items():
        assert path.read_bytes() == analyses[1].files[name].read_bytes(), name
        assert path.read_bytes() == again.files[name].read_bytes(), name
