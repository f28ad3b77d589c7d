import json
from pathlib import Path

import pytest

from zkfl.config import ExperimentConfig, FederationSpec, PolicySpec, TrainingSpec
from zkfl.errors import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_defaults_round_trip():
    cfg = ExperimentConfig()
    doc = json.loads(json.dumps(cfg.to_json()))
    assert ExperimentConfig.from_json(doc) == cfg
    assert cfg.dimension == cfg.federation.feature_dim + 1
    assert cfg.quantized_norm_bound() == 4 * 65536
    assert cfg.parity_bound_l1() == cfg.dimension / 2 / 65536


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("run_*.json")) + sorted(CONFIGS.glob("attack_*.json")))
def test_shipped_configs_load(path):
    ExperimentConfig.load(path)


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.pop("schema_version"),
        lambda d: d.update(schema_version=2),
        lambda d: d.update(bogus=1),
        lambda d: d["federation"].update(bogus=1),
        lambda d: d.update(backend="snark"),
        lambda d: d.update(rounds=0),
        lambda d: d["federation"].update(per_site=[1, 2]),
        lambda d: d["federation"].update(skew=1.5),
        lambda d: d.update(attacks={"scenarios": ["nope"]}),
        lambda d: d.update(hash_name="md5"),
        lambda d: d["training"].update(clip_norm=4.0),
    ],
)
def test_invalid_configs_rejected(mutate):
    d = ExperimentConfig().to_json()
    mutate(d)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json(d)


def test_unreadable_config(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        ExperimentConfig.load(p)
    with pytest.raises(ConfigError):
        ExperimentConfig.load(tmp_path / "missing.json")


def test_replace_revalidates():
    cfg = ExperimentConfig()
    assert cfg.replace(seed=7).seed == 7
    with pytest.raises(ConfigError):
        cfg.replace(workers=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(federation=FederationSpec(num_sites=0))
    with pytest.raises(ConfigError):
        ExperimentConfig(policy=PolicySpec(norm_bound=1.0), training=TrainingSpec(clip_norm=2.0))
