import pytest
from pydantic import ValidationError

from clarify_timing.conditions import Condition, Dimension
from clarify_timing.gateway.wire import ToolDescriptor
from clarify_timing.trial import (
    Action,
    Protocol,
    RemovedSegment,
    Trial,
    TrialStatus,
    checked_trial_adapter,
    checked_variant_adapter,
    trial_error_finder,
    validate_variant,
)
from tests.factories import make_actions, make_trial, make_variant


def test_valid_variant_has_no_violations():
    assert validate_variant(make_variant()) == []


def test_variant_violations_name_the_field():
    variant = make_variant().model_copy(
        update={
            "variant_id": "",
            "removed_segments": [],
            "underspecified_prompt": make_variant().oracle_prompt,
            "tools": [ToolDescriptor(name="ask_user")],
        }
    )
    assert validate_variant(variant) == [
        "variant_id empty",
        "removed_segments empty",
        "prompts identical",
        "tools must not list `ask_user`",
    ]


def test_empty_segment_value():
    variant = make_variant(segments=[RemovedSegment(dimension=Dimension.INPUT, value="  ")])
    assert validate_variant(variant) == ["removed_segments[0].value empty"]
    with pytest.raises(ValidationError, match=r"removed_segments\[0\]"):
        checked_variant_adapter.validate_python(variant)


def test_action_uses_released_field_name():
    action = Action.model_validate({"index": 1, "action_name": "search", "tokens": 12})
    assert action.name == "search"
    record = action.model_dump(by_alias=True)
    assert record["action_name"] == "search"
    assert record["tokens"] == 12


def test_unknown_trial_fields_survive_round_trip():
    trial = Trial.model_validate(
        {**make_trial().model_dump(by_alias=True), "benchmark_run": "nightly"}
    )
    parsed = checked_trial_adapter.validate_json(trial.to_record())
    assert parsed.model_extra == {"benchmark_run": "nightly"}
    assert parsed == trial


def test_unknown_nested_fields_survive_round_trip():
    record = make_trial(condition=Condition.injection(0.3), pre=1, names=["search"] * 2)
    raw = {
        **record.model_dump(by_alias=True),
        "condition": {"kind": "injection", "fraction": "0.3", "source": "rerun"},
        "conversation": [{"role": "user", "text": "Export it.", "turn_id": "u-1"}],
    }
    parsed = checked_trial_adapter.validate_json(Trial.model_validate(raw).to_record())
    assert parsed.condition.model_extra == {"source": "rerun"}
    assert parsed.condition.key == "injection:0.3"
    assert parsed.conversation[0].model_extra == {"turn_id": "u-1"}


def test_valid_injection_trial():
    trial = make_trial(
        condition=Condition.injection(0.5), names=["a", "b", "c", "d"], pre=2, success=True
    )
    assert trial_error_finder(trial) == []
    assert trial.cell_key == ("report-1", "agent-a", "injection:0.5")


def test_count_violations():
    trial = make_trial(names=["a", "b"]).model_copy(
        update={"total_actions": 3, "post_injection_actions": 1}
    )
    violations = trial_error_finder(trial)
    assert "total_actions is 3 but 2 actions are recorded" in violations
    assert any(v.startswith("pre_injection_actions + post_injection_actions") for v in violations)


def test_indices_must_be_consecutive():
    actions = make_actions(["a", "b"])
    gap = [actions[0], actions[1].model_copy(update={"index": 3})]
    trial = make_trial(actions=gap)
    assert trial_error_finder(trial) == ["action indices are not consecutive from 1: [1, 3]"]


def test_injection_bookkeeping():
    trial = make_trial(condition=Condition.injection(0.5), names=["a", "b", "c"], pre=2)
    assert "injection_point absent for an injection condition" in trial_error_finder(
        trial.model_copy(update={"injection_point": None})
    )
    shifted = trial.model_copy(update={"injection_point": 1})
    assert trial_error_finder(shifted) == ["pre_injection_actions (2) != injection_point (1)"]

    flags = [action.model_copy(update={"is_pre_injection": False}) for action in trial.actions]
    assert trial_error_finder(trial.model_copy(update={"actions": flags})) == [
        "is_pre_injection flags do not match pre_injection_actions"
    ]


def test_failed_trial_may_stop_before_injection():
    trial = make_trial(
        condition=Condition.injection(0.9),
        names=["a"],
        pre=1,
        status=TrialStatus.FAILED,
    ).model_copy(update={"injection_point": 4})
    assert trial_error_finder(trial) == []


def test_non_injection_trial_has_no_injection_point():
    trial = make_trial().model_copy(update={"injection_point": 1})
    assert trial_error_finder(trial) == ["injection_point present for a non-injection condition"]


def test_ask_events():
    natural = make_trial(
        condition=Condition.no_clarification(),
        names=["a", "ask_user", "b"],
        protocol=Protocol.NATURAL,
        ask_at=[2],
    )
    assert trial_error_finder(natural) == []
    forced = natural.model_copy(update={"protocol": Protocol.FORCED})
    assert trial_error_finder(forced) == ["ask_events recorded in a forced-injection trial"]
    late = make_trial(
        condition=Condition.no_clarification(),
        names=["a"],
        protocol=Protocol.NATURAL,
        ask_at=[5],
    )
    assert trial_error_finder(late) == ["ask event at action 5 outside 1..1"]


def test_checked_trial_lists_all_violations():
    trial = make_trial(names=["a"]).model_copy(
        update={"total_actions": 2, "injection_point": 1}
    )
    with pytest.raises(ValidationError) as err:
        checked_trial_adapter.validate_python(trial)
    violations = err.value.errors()[0]["ctx"]["violations"]
    assert "total_actions is 2 but 1 actions are recorded" in violations
    assert "injection_point present for a non-injection condition" in violations
