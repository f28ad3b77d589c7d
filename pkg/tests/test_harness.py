import json

import pytest

from zkfl.config import CONTROL_SCENARIO, SCENARIO_NAMES
from zkfl.errors import ConfigError
from zkfl.harness import EXPECTATIONS, run_all, run_baseline, run_scenario


@pytest.mark.parametrize("name", SCENARIO_NAMES)
def test_scenario_detected_at_designated_layer(name):
    rep = run_scenario(name, seed=3)
    assert rep.as_expected, rep.to_json()
    assert rep.detected and rep.detecting_layer == EXPECTATIONS[name].layer
    assert rep.audit_confirmed


def test_control_is_not_detected():
    rep = run_scenario(CONTROL_SCENARIO, seed=3)
    assert not rep.detected and rep.as_expected


def test_baseline_clean():
    rep = run_baseline(seed=4)
    assert rep.baseline_clean and not rep.detected and rep.as_expected


def test_skipping_verification_makes_tamper_succeed():
    rep = run_scenario("tamper-delta", seed=0, skip_verification=True)
    assert not rep.detected and not rep.as_expected


def test_unknown_scenario():
    with pytest.raises(ConfigError):
        run_scenario("no-such-attack")
    with pytest.raises(ConfigError):
        run_all(scenarios=("no-such-attack",))


def test_suite_result_serializes():
    res = run_all(seeds=[1], scenarios=("replay-update", "norm-poison"))
    assert res.complete
    doc = json.loads(json.dumps(res.to_json()))
    assert len(doc["reports"]) == 3 and len(doc["baselines"]) == 1
    assert "replay-update" in res.summary()
