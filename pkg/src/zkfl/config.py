"""Experiment configuration: a strict JSON schema validated as a whole before any run."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .crypto.hashing import SUPPORTED_HASHES
from .encoding import FixedPointConfig
from .errors import ConfigError, ZkflError
from .fl import AggregationPolicy, TrainConfig, make_model

SCHEMA_VERSION = 1

SCENARIO_NAMES = (
    "tamper-delta",
    "exclude-client",
    "inject-fabricated",
    "replay-update",
    "sybil-unregistered",
    "duplicate-submission",
    "norm-poison",
    "equivocate-model",
    "ledger-mutation",
)
CONTROL_SCENARIO = "semantic-poison"


@dataclass(frozen=True)
class FederationSpec:
    num_sites: int = 8
    per_site: int | tuple[int, ...] = 200
    feature_dim: int = 127
    skew: float = 0.3
    class_separation: float = 2.0
    test_size: int = 2000


@dataclass(frozen=True)
class ModelSpec:
    kind: str = "logreg"
    hidden: int = 16
    dimension: int | None = None  # optional cross-check of the derived parameter count


@dataclass(frozen=True)
class TrainingSpec:
    learning_rate: float = 0.1
    local_epochs: int = 1
    batch_size: int = 32
    clip_norm: float | None = None


@dataclass(frozen=True)
class PolicySpec:
    norm_bound: float = 4.0  # L2 bound on a client update, in model units
    quorum: int = 1
    round_timeout: int = 4
    max_weight: int = 1_000_000


@dataclass(frozen=True)
class EncodingSpec:
    fractional_bits: int = 16
    clamp_magnitude: float = 8.0


@dataclass(frozen=True)
class AttackSuiteSpec:
    scenarios: tuple[str, ...] = SCENARIO_NAMES
    repetitions: int = 1
    include_control: bool = True
    skip_verification: tuple[str, ...] = ()  # self-test: disable the contract's proof check


@dataclass(frozen=True)
class ExperimentConfig:
    federation: FederationSpec = field(default_factory=FederationSpec)
    model: ModelSpec = field(default_factory=ModelSpec)
    training: TrainingSpec = field(default_factory=TrainingSpec)
    policy: PolicySpec = field(default_factory=PolicySpec)
    encoding: EncodingSpec = field(default_factory=EncodingSpec)
    backend: str = "transparent"
    mock_scale: float = 1.0
    rounds: int = 20
    seed: int = 0
    hash_name: str = "sha256"
    workers: int = 1
    attacks: AttackSuiteSpec | None = None
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self) -> None:
        try:
            self._validate()
        except ConfigError:
            raise
        except (ValueError, TypeError, ZkflError) as exc:
            raise ConfigError(str(exc)) from exc

    def _validate(self) -> None:
        fed = self.federation
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"schema_version must be {SCHEMA_VERSION}")
        if fed.num_sites < 1 or fed.feature_dim < 1 or fed.test_size < 2:
            raise ConfigError("num_sites, feature_dim must be >= 1 and test_size >= 2")
        if isinstance(fed.per_site, tuple):
            if len(fed.per_site) != fed.num_sites or min(fed.per_site) < 1:
                raise ConfigError("per_site list must give one positive size per site")
        elif fed.per_site < 1:
            raise ConfigError("per_site must be >= 1")
        if not 0.0 <= fed.skew <= 1.0:
            raise ConfigError("skew must be in [0, 1]")
        if self.model.dimension is not None and self.model.dimension != self.dimension:
            raise ConfigError(f"model.dimension {self.model.dimension} != derived {self.dimension}")
        if self.backend not in ("transparent", "mock"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.hash_name not in SUPPORTED_HASHES:
            raise ConfigError(f"unsupported hash {self.hash_name!r}")
        if self.rounds < 1 or self.workers < 1 or self.seed < 0 or self.mock_scale < 0:
            raise ConfigError("rounds, workers must be >= 1; seed, mock_scale must be >= 0")
        if max(self.site_sizes) > self.policy.max_weight:
            raise ConfigError("a site's dataset size exceeds policy.max_weight")
        self.fixed_point()
        self.aggregation_policy()
        self.train_config(0)
        t = self.training
        if t.clip_norm is not None:
            S = 1 << self.encoding.fractional_bits
            if t.clip_norm * S + math.sqrt(self.dimension) / 2 > self.quantized_norm_bound():
                raise ConfigError("clip_norm leaves no room for rounding under the norm bound")
        if self.attacks is not None:
            unknown = set(self.attacks.scenarios) - set(SCENARIO_NAMES)
            unknown |= set(self.attacks.skip_verification) - set(SCENARIO_NAMES)
            if unknown:
                raise ConfigError(f"unknown scenario(s): {sorted(unknown)}")
            if self.attacks.repetitions < 1:
                raise ConfigError("attacks.repetitions must be >= 1")

    # -- derived objects -----------------------------------------------------

    @property
    def site_sizes(self) -> tuple[int, ...]:
        p = self.federation.per_site
        return p if isinstance(p, tuple) else (p,) * self.federation.num_sites

    @property
    def dimension(self) -> int:
        return make_model(self.model.kind, self.federation.feature_dim, self.model.hidden).dimension

    def fixed_point(self) -> FixedPointConfig:
        return FixedPointConfig(
            dimension=self.dimension,
            fractional_bits=self.encoding.fractional_bits,
            clamp_magnitude=self.encoding.clamp_magnitude,
            max_clients=self.federation.num_sites,
            max_weight=self.policy.max_weight,
        )

    def quantized_norm_bound(self) -> int:
        return math.floor(self.policy.norm_bound * (1 << self.encoding.fractional_bits))

    def parity_bound_l1(self) -> float:
        """L1 distance allowed between the verified and plain FedAvg deltas: half a quantum per coordinate."""
        return self.dimension / (2 * (1 << self.encoding.fractional_bits))

    def aggregation_policy(self) -> AggregationPolicy:
        return AggregationPolicy(
            norm_bound=self.quantized_norm_bound(),
            quorum=self.policy.quorum,
            round_timeout=self.policy.round_timeout,
            max_weight=self.policy.max_weight,
            hash_name=self.hash_name,
        )

    def train_config(self, rng_seed: int) -> TrainConfig:
        t = self.training
        return TrainConfig(t.learning_rate, t.local_epochs, t.batch_size, rng_seed, t.clip_norm)

    def replace(self, **changes: Any) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    # -- JSON ----------------------------------------------------------------

    def to_json(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        for key in ("per_site",):
            if isinstance(d["federation"][key], tuple):
                d["federation"][key] = list(d["federation"][key])
        if d["attacks"] is not None:
            d["attacks"] = {k: list(v) if isinstance(v, tuple) else v for k, v in d["attacks"].items()}
        return d

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "ExperimentConfig":
        if not isinstance(doc, Mapping):
            raise ConfigError("config must be a JSON object")
        if "schema_version" not in doc:
            raise ConfigError("missing schema_version")
        sections = {
            "federation": FederationSpec,
            "model": ModelSpec,
            "training": TrainingSpec,
            "policy": PolicySpec,
            "encoding": EncodingSpec,
            "attacks": AttackSuiteSpec,
        }
        kwargs: dict[str, Any] = {}
        for key, value in doc.items():
            if key in sections:
                kwargs[key] = None if value is None else _build(sections[key], value, key)
            elif key in {f.name for f in dataclasses.fields(cls)}:
                kwargs[key] = value
            else:
                raise ConfigError(f"unknown config key {key!r}")
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_json(doc)


def _build(cls: type, value: Any, path: str) -> Any:
    if not isinstance(value, Mapping):
        raise ConfigError(f"{path} must be an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(value) - names
    if unknown:
        raise ConfigError(f"unknown key(s) in {path}: {sorted(unknown)}")
    fixed = {k: tuple(v) if isinstance(v, list) else v for k, v in value.items()}
    try:
        return cls(**fixed)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
