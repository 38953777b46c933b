import json
from pathlib import Path

import pytest

from clarify_timing.conditions import Condition
from clarify_timing.exceptions import (
    ArchiveMissingError,
    ArchiveParseError,
    ConfigError,
    TrialRejectedError,
)
from clarify_timing.trial import (
    TRIALS_FILE,
    VARIANTS_FILE,
    RunArchive,
    append_trial,
    load_manifest,
    load_trials,
    load_variants,
    write_variants,
)
from tests.factories import make_trial, make_variant


@pytest.fixture()
def trials():
    return [
        make_trial(seed=0, names=["a", "b"], success=True),
        make_trial(seed=1, names=["a"]),
        make_trial(model="agent-b", condition=Condition.injection(0.3), names=["a", "b"], pre=1),
    ]


def test_append_and_load(tmp_path: Path, trials):
    with RunArchive(tmp_path) as archive:
        indices = [append_trial(archive, trial) for trial in trials]
        assert archive.count == 3
    assert indices == [0, 1, 2]
    assert load_trials(tmp_path) == trials
    assert load_trials(tmp_path / TRIALS_FILE) == trials


def test_records_are_single_lines(tmp_path: Path, trials):
    with RunArchive(tmp_path) as archive:
        for trial in trials:
            archive.append(trial)
    lines = (tmp_path / TRIALS_FILE).read_text(encoding="utf-8").splitlines()
    assert len(lines) == 3
    assert json.loads(lines[0])["actions"][0]["action_name"] == "a"


def test_filter(tmp_path: Path, trials):
    with RunArchive(tmp_path) as archive:
        for trial in trials:
            archive.append(trial)
    selected = load_trials(tmp_path, lambda variant_id, model, condition: model == "agent-b")
    assert selected == trials[2:]


def test_append_is_append_only_unless_fresh(tmp_path: Path, trials):
    with RunArchive(tmp_path) as archive:
        archive.append(trials[0])
    with RunArchive(tmp_path) as archive:
        archive.append(trials[1])
    assert len(load_trials(tmp_path)) == 2
    with RunArchive(tmp_path, fresh=True) as archive:
        archive.append(trials[2])
    assert load_trials(tmp_path) == trials[2:]


def test_rejected_trial_is_not_written(tmp_path: Path, trials):
    broken = trials[0].model_copy(update={"total_actions": 5})
    with RunArchive(tmp_path) as archive:
        with pytest.raises(TrialRejectedError) as err:
            archive.append(broken)
        assert archive.count == 0
    assert "total_actions is 5 but 2 actions are recorded" in err.value.message
    assert load_trials(tmp_path) == []


def test_missing_archive(tmp_path: Path):
    with pytest.raises(ArchiveMissingError):
        load_trials(tmp_path)
    with pytest.raises(ArchiveMissingError):
        load_manifest(tmp_path)


def test_malformed_record_names_the_line(tmp_path: Path, trials):
    path = tmp_path / TRIALS_FILE
    path.write_text(trials[0].to_record() + "\n{not json}\n", encoding="utf-8")
    with pytest.raises(ArchiveParseError) as err:
        load_trials(path)
    assert err.value.line_number == 2


def test_invariant_breaking_record_is_a_parse_error(tmp_path: Path, trials):
    record = json.loads(trials[0].to_record())
    record["total_actions"] = 9
    (tmp_path / TRIALS_FILE).write_text(json.dumps(record) + "\n", encoding="utf-8")
    with pytest.raises(ArchiveParseError, match="total_actions"):
        load_trials(tmp_path)


def test_variant_snapshot_round_trip(tmp_path: Path):
    variants = [make_variant("v-1"), make_variant("v-2")]
    path = write_variants(tmp_path, variants)
    assert path.name == VARIANTS_FILE
    assert load_variants(path) == variants


def test_variant_corpus_errors(tmp_path: Path):
    with pytest.raises(ConfigError, match="file not found"):
        load_variants(tmp_path / "missing.json")

    write_variants(tmp_path, [make_variant("dup"), make_variant("dup")])
    with pytest.raises(ConfigError) as err:
        load_variants(tmp_path / VARIANTS_FILE)
    assert err.value.problems == ["variants: variant_id duplicated: 'dup'"]

    bad = tmp_path / "bad.json"
    record = make_variant("v").model_dump(mode="json")
    record["underspecified_prompt"] = record["oracle_prompt"]
    bad.write_text(json.dumps([record]), encoding="utf-8")
    with pytest.raises(ConfigError) as err:
        load_variants(bad)
    assert err.value.problems == ["variants.0: prompts identical"]
