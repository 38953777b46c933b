import json
import math
from pathlib import Path

import pandas as pd
import pytest

from clarify_timing.analysis import AnalysisSettings, analyze_run, gap_lost
from clarify_timing.analysis.tables import (
    ASK_SUMMARY_FILE,
    ASK_BY_VARIANT_FILE,
    ASK_OVERLAY_FILE,
    ASK_TIMINGS_FILE,
    FINDINGS_FILE,
    KENDALL_MATRIX_FILE,
    KENDALL_PAIRS_FILE,
    META_FILE,
    PONR_FILE,
    RUN_COUNTS_FILE,
    VOI_COMPLETE_FILE,
    VOI_CURVES_FILE,
    VOI_POOLED_FILE,
    WASTED_COMPUTE_FILE,
    wasted_compute_table,
)
from clarify_timing.conditions import Condition
from clarify_timing.exceptions import ArchiveError, ArchiveMissingError
from clarify_timing.gateway import ProcessEndpoint, ScriptedEndpoint, SimulatorEndpoint
from clarify_timing.protocol import ExperimentConfig, run_experiment
from clarify_timing.sim.corpus import build_sim_corpus, default_document
from clarify_timing.trial import Action, Protocol, RunArchive
from tests.factories import make_trial, make_variant, tool_calls


def read_table(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, dtype=str, keep_default_na=False)


@pytest.fixture(scope="module")
def sim_run(tmp_path_factory) -> Path:
    run_dir = tmp_path_factory.mktemp("sim-run")
    config = ExperimentConfig(
        variants=build_sim_corpus(default_document(3)),
        agents=[SimulatorEndpoint(name="sim-a"), SimulatorEndpoint(name="sim-b")],
        stats_seed=11,
    )
    run_experiment(config, run_dir)
    return run_dir


def test_analysis_of_a_sim_run(sim_run: Path, tmp_path: Path):
    result = analyze_run(sim_run, tmp_path, AnalysisSettings(n_perm=500))

    assert set(result.files) == {
        "voi_curves",
        "voi_plot",
        "voi_curves_complete",
        "voi_curves_pooled",
        "wasted_compute",
        "kendall_matrix",
        "kendall_pvalues",
        "kendall_by_benchmark",
        "run_counts",
        "ponr",
        "ponr_tests",
        "findings",
        "meta",
    }
    voi = pd.read_csv(tmp_path / VOI_CURVES_FILE)
    assert voi["dimension"].tolist() == ["constraint", "context", "goal", "input"]
    assert (voi["n_Oracle"] == 6).all()
    assert voi[["Oracle", "Inj-10", "Inj-90", "NC"]].notna().all().all()

    kendall = pd.read_csv(tmp_path / KENDALL_MATRIX_FILE)
    assert kendall["model"].tolist() == ["sim-a", "sim-b"]
    assert kendall.loc[0, "sim-a"] == 1.0

    ponr = read_table(tmp_path / PONR_FILE)
    assert ponr["dimension"].tolist() == ["goal", "constraint", "input", "context"]
    assert (ponr["divergent"] == "--").all()

    findings = read_table(tmp_path / FINDINGS_FILE)
    assert {"gap_lost_inj10", "gap_lost_inj50", "optimal_window", "ponr", "tau_range"} <= set(
        findings["finding"]
    )
    assert not (tmp_path / ASK_SUMMARY_FILE).exists()
    assert not (tmp_path / ASK_OVERLAY_FILE).exists()

    complete = pd.read_csv(tmp_path / VOI_COMPLETE_FILE)
    assert complete["n_Inj-30"].tolist() == voi["n_Inj-30"].tolist()
    pooled = pd.read_csv(tmp_path / VOI_POOLED_FILE)
    assert set(pooled["benchmark"]) == {"all"}
    assert pooled["n_Oracle"].tolist() == [6, 6, 6, 6]

    pairs = read_table(tmp_path / KENDALL_PAIRS_FILE)
    assert set(zip(pairs["scope"], pairs["units"])) == {
        ("all", "all"),
        ("all", "complete"),
        ("sim", "all"),
        ("sim", "complete"),
    }
    assert (pairs["n_units"] == str(12 * 7)).all()

    counts = read_table(tmp_path / RUN_COUNTS_FILE).set_index("benchmark")
    assert list(counts.index) == ["sim", "total"]
    assert counts.loc["total", "total_trials"] == str(12 * 2 * 7 * 3)
    assert counts.loc["total", "natural_sessions"] == "0"

    meta = json.loads((tmp_path / META_FILE).read_text(encoding="utf-8"))
    assert meta["stats_seed"] == 11
    assert meta["trials"] == 12 * 2 * 7 * 3
    assert meta["cells"]["sim-goal-1|sim-a|oracle"]["n_trials"] == 3
    assert meta["complete_units"] == 24


def test_analysis_is_byte_identical(sim_run: Path, tmp_path: Path):
    settings = AnalysisSettings(n_perm=300)
    first = analyze_run(sim_run, tmp_path / "first", settings)
    second = analyze_run(sim_run, tmp_path / "second", settings)
    for name, path in first.files.items():
        assert path.read_bytes() == second.files[name].read_bytes(), name


def test_default_output_directory(sim_run: Path):
    result = analyze_run(sim_run, settings=AnalysisSettings(n_perm=100))
    assert result.out_dir == sim_run / "analysis"
    assert (sim_run / "analysis" / VOI_CURVES_FILE).is_file()


def test_trial_filter(sim_run: Path, tmp_path: Path):
    analyze_run(
        sim_run,
        tmp_path,
        AnalysisSettings(n_perm=100),
        trial_filter=lambda variant_id, model, condition: model == "sim-a",
    )
    kendall = pd.read_csv(tmp_path / KENDALL_MATRIX_FILE)
    assert kendall["model"].tolist() == ["sim-a"]


def test_oracle_only_run(tmp_path: Path):
    config = ExperimentConfig(
        variants=build_sim_corpus(default_document(1)),
        agents=[SimulatorEndpoint()],
        conditions=[Condition.oracle()],
    )
    run_experiment(config, tmp_path)
    result = analyze_run(tmp_path, tmp_path / "analysis")

    voi = pd.read_csv(tmp_path / "analysis" / VOI_CURVES_FILE)
    assert voi["Oracle"].notna().all()
    assert voi[["Inj-10", "Inj-30", "Inj-50", "Inj-70", "Inj-90", "NC"]].isna().all().all()
    assert len(result.excluded_strata) == 4
    wasted = pd.read_csv(tmp_path / "analysis" / WASTED_COMPUTE_FILE)
    assert wasted.empty


def test_natural_run_without_asks(tmp_path: Path):
    config = ExperimentConfig(
        variants=[make_variant("v-1"), make_variant("v-2")],
        agents=[ScriptedEndpoint(name="silent", default_script=tool_calls(4))],
        protocol=Protocol.NATURAL,
    )
    run_experiment(config, tmp_path)
    analyze_run(tmp_path, tmp_path / "analysis")

    asks = read_table(tmp_path / "analysis" / ASK_SUMMARY_FILE)
    assert asks.to_dict("records") == [
        {
            "model": "silent",
            "sessions": "6",
            "ask_rate": "0.000000",
            "total_calls": "0",
            "calls_per_asking_session": "0.000000",
            "mean_first_timing": "--",
            "median_first_timing": "--",
            "window_share": "--",
        }
    ]
    per_variant = read_table(tmp_path / "analysis" / ASK_BY_VARIANT_FILE)
    assert per_variant["variant_id"].tolist() == ["v-1", "v-2"]
    assert per_variant["sessions"].tolist() == ["3", "3"]
    assert (per_variant["mean_first_timing"] == "--").all()
    assert read_table(tmp_path / "analysis" / ASK_TIMINGS_FILE).empty
    overlay = read_table(tmp_path / "analysis" / ASK_OVERLAY_FILE)
    assert not any(series.startswith("ask:") for series in overlay["series"])


def test_run_without_graded_trials(tmp_path: Path):
    ghost = ProcessEndpoint(name="ghost", command=[str(tmp_path / "no-such-agent")])
    run_experiment(ExperimentConfig(variants=[make_variant()], agents=[ghost]), tmp_path / "run")
    with pytest.raises(ArchiveError, match="no graded trials"):
        analyze_run(tmp_path / "run")


def test_missing_inputs(tmp_path: Path):
    with pytest.raises(ArchiveMissingError):
        analyze_run(tmp_path)
    with RunArchive(tmp_path) as archive:
        archive.append(make_trial(success=True))
    with pytest.raises(ArchiveMissingError, match="variants.json"):
        analyze_run(tmp_path)


def test_wasted_compute_units_per_benchmark():
    variants = {
        "swe-1": make_variant("swe-1", benchmark="swe-pro"),
        "tac-1": make_variant("tac-1", benchmark="tac"),
    }
    oracle = [Action(index=1, name="open"), Action(index=2, name="write_file")]
    trials = []
    for variant_id in variants:
        trials.append(make_trial(variant_id=variant_id, actions=oracle))
        pre = [
            Action(index=1, name="open", is_pre_injection=True),
            Action(index=2, name="search", is_pre_injection=True),
            Action(index=3, name="write_file"),
        ]
        trials.append(
            make_trial(
                variant_id=variant_id, condition=Condition.injection(0.3), actions=pre, pre=2
            )
        )
    table = wasted_compute_table(trials, variants, AnalysisSettings())

    rows = {(row["benchmark"], row["unit"]): row for row in table.to_dict("records")}
    assert rows[("swe-pro", "absolute")]["Inj-30"] == 1.0
    assert rows[("swe-pro", "absolute")]["reported"]
    assert not rows[("swe-pro", "fraction")]["reported"]
    assert rows[("tac", "fraction")]["Inj-30"] == 0.5
    assert rows[("tac", "fraction")]["reported"]
    assert math.isnan(rows[("tac", "fraction")]["Inj-10"])


def test_gap_lost():
    curve = {"Oracle": 0.8, "NC": 0.4, "Inj-10": 0.6, "Inj-50": math.nan}
    assert gap_lost(curve, "Inj-10") == pytest.approx(0.5)
    assert math.isnan(gap_lost(curve, "Inj-50"))
    assert math.isnan(gap_lost({"Oracle": 0.4, "NC": 0.4, "Inj-10": 0.4}, "Inj-10"))
