"""Desk-scale federated learning workload.

Logistic regression (default) or a one-hidden-layer tanh MLP over flat
parameter vectors, synthetic two-Gaussian sites with controllable label skew,
minibatch SGD local training and dataset-size-weighted FedAvg.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .crypto.hashing import DEFAULT_HASH, digest
from .errors import ProtocolError, ShapeError
from .serialization import Reader, Writer


# -- models -----------------------------------------------------------------


class LogisticModel:
    kind = "logreg"

    def __init__(self, feature_dim: int) -> None:
        self.feature_dim = feature_dim

    @property
    def dimension(self) -> int:
        return self.feature_dim + 1

    def init_params(self, rng: np.random.Generator | None = None) -> np.ndarray:
        return np.zeros(self.dimension)

    def logits(self, w: np.ndarray, X: np.ndarray) -> np.ndarray:
        return X @ w[:-1] + w[-1]

    def loss_and_grad(self, w: np.ndarray, X: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
        z = self.logits(w, X)
        loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
        err = _sigmoid(z) - y
        grad = np.empty_like(w)
        grad[:-1] = X.T @ err / len(y)
        grad[-1] = err.mean()
        return loss, grad


class MLPModel:
    """``tanh(X·W1 + b1)·w2 + b2``; parameters flattened as W1, b1, w2, b2."""

    kind = "mlp"

    def __init__(self, feature_dim: int, hidden: int = 16) -> None:
        self.feature_dim = feature_dim
        self.hidden = hidden

    @property
    def dimension(self) -> int:
        k, h = self.feature_dim, self.hidden
        return k * h + h + h + 1

    def init_params(self, rng: np.random.Generator | None = None) -> np.ndarray:
        rng = rng or np.random.default_rng(0)
        w = np.zeros(self.dimension)
        k, h = self.feature_dim, self.hidden
        w[: k * h] = rng.normal(scale=1.0 / math.sqrt(k), size=k * h)
        w[k * h + h : k * h + 2 * h] = rng.normal(scale=1.0 / math.sqrt(h), size=h)
        return w

    def _unpack(self, w: np.ndarray):
        k, h = self.feature_dim, self.hidden
        W1 = w[: k * h].reshape(k, h)
        b1 = w[k * h : k * h + h]
        w2 = w[k * h + h : k * h + 2 * h]
        return W1, b1, w2, w[-1]

    def logits(self, w: np.ndarray, X: np.ndarray) -> np.ndarray:
        W1, b1, w2, b2 = self._unpack(w)
        return np.tanh(X @ W1 + b1) @ w2 + b2

    def loss_and_grad(self, w: np.ndarray, X: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
        W1, b1, w2, b2 = self._unpack(w)
        a = np.tanh(X @ W1 + b1)
        z = a @ w2 + b2
        loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
        dz = (_sigmoid(z) - y) / len(y)
        da = np.outer(dz, w2) * (1.0 - a * a)
        return loss, np.concatenate([(X.T @ da).ravel(), da.sum(axis=0), a.T @ dz, [dz.sum()]])


def make_model(kind: str, feature_dim: int, hidden: int = 16) -> LogisticModel | MLPModel:
    if kind == "logreg":
        return LogisticModel(feature_dim)
    if kind == "mlp":
        return MLPModel(feature_dim, hidden)
    raise ValueError(f"unknown model kind {kind!r}")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


# -- data types ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ModelParams:
    weights: np.ndarray
    kind: str = "logreg"

    def to_bytes(self) -> bytes:
        return Writer().text(self.kind).f64_vector(self.weights).getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "ModelParams":
        r = Reader(data)
        kind, w = r.text(), r.f64_vector()
        r.done()
        return cls(w, kind)

    def model_hash(self, hash_name: str = DEFAULT_HASH) -> bytes:
        return digest(self.to_bytes(), hash_name)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ModelParams):
            return NotImplemented
        return self.kind == other.kind and np.array_equal(self.weights, other.weights)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    site_id: str = "site-0"

    def __post_init__(self) -> None:
        if self.features.ndim != 2 or len(self.features) < 1:
            raise ShapeError("features must be a non-empty 2-D array")
        if self.labels.shape != (len(self.features),):
            raise ShapeError("labels must match feature rows")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def to_bytes(self) -> bytes:
        w = Writer().text(self.site_id).u32(len(self)).u32(self.feature_dim)
        w.f64_vector(self.features.ravel())
        return w.var(self.labels.astype(np.uint8).tobytes()).getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "Dataset":
        r = Reader(data)
        site, n, k = r.text(), r.u32(), r.u32()
        X = r.f64_vector().reshape(n, k)
        y = np.frombuffer(r.var(), dtype=np.uint8).astype(np.float64)
        r.done()
        return cls(X, y, site)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    local_epochs: int = 1
    batch_size: int = 32
    rng_seed: int = 0
    clip_norm: float | None = None

    def __post_init__(self) -> None:
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.local_epochs < 0:
            raise ValueError("local_epochs must be >= 0")


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    auc: float | None
    loss: float

    @property
    def auc_defined(self) -> bool:
        return self.auc is not None


# -- operations ---------------------------------------------------------------


def local_train(
    W: np.ndarray,
    D: Dataset,
    cfg: TrainConfig,
    model: LogisticModel | MLPModel | None = None,
) -> np.ndarray:
    """Return the clipped delta ``W_local - W`` after ``cfg.local_epochs`` of SGD."""
    model = model or LogisticModel(D.feature_dim)
    W = np.asarray(W, dtype=np.float64)
    if W.shape != (model.dimension,) or model.feature_dim != D.feature_dim:
        raise ShapeError(f"model dimension {model.dimension} does not fit W {W.shape} / data k={D.feature_dim}")
    rng = np.random.default_rng(cfg.rng_seed)
    w = W.copy()
    n = len(D)
    bs = cfg.batch_size if cfg.batch_size and cfg.batch_size > 0 else n
    for _ in range(cfg.local_epochs):
        order = rng.permutation(n)
        for start in range(0, n, bs):
            idx = order[start : start + bs]
            _, g = model.loss_and_grad(w, D.features[idx], D.labels[idx])
            w -= cfg.learning_rate * g
    delta = w - W
    if cfg.clip_norm is not None:
        norm = float(np.linalg.norm(delta))
        if norm > cfg.clip_norm:
            delta *= cfg.clip_norm / norm
    return delta


def fedavg_aggregate(updates: Sequence[np.ndarray], weights: Sequence[int]) -> np.ndarray:
    if len(updates) == 0:
        raise ProtocolError("empty-round", "no updates to aggregate")
    if len(updates) != len(weights):
        raise ShapeError("updates and weights differ in length")
    U = np.asarray([np.asarray(u, dtype=np.float64) for u in updates]) if _same_shape(updates) else None
    if U is None or U.ndim != 2:
        raise ShapeError("updates must share one flat dimension")
    n = np.asarray(weights, dtype=np.float64)
    if np.any(n <= 0):
        raise ValueError("weights must be positive")
    return (n @ U) / n.sum()


def _same_shape(updates: Sequence[np.ndarray]) -> bool:
    shapes = {np.shape(u) for u in updates}
    return len(shapes) == 1


def apply_update(W: np.ndarray, delta: np.ndarray) -> np.ndarray:
    W = np.asarray(W, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    if W.shape != delta.shape:
        raise ShapeError(f"cannot apply delta {delta.shape} to model {W.shape}")
    return W + delta


def roc_auc(scores: np.ndarray, labels: np.ndarray) -> float | None:
    """Mann–Whitney rank statistic; ``None`` for one class or constant scores."""
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0 or np.all(scores == scores[0]):
        return None
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def evaluate(W: np.ndarray, D: Dataset, model: LogisticModel | MLPModel | None = None) -> Metrics:
    model = model or LogisticModel(D.feature_dim)
    z = model.logits(np.asarray(W, dtype=np.float64), D.features)
    y = D.labels
    acc = float(np.mean((z > 0) == (y > 0.5)))
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    return Metrics(acc, roc_auc(z, y), loss)


# -- synthetic federation -------------------------------------------------------


def _class_mean(seed: int, k: int, separation: float) -> np.ndarray:
    mu = np.random.default_rng([seed, 0]).normal(size=k)
    return mu / np.linalg.norm(mu) * separation / 2.0


def _sample(rng: np.random.Generator, mu: np.ndarray, n: int, pos_ratio: float) -> tuple[np.ndarray, np.ndarray]:
    y = (rng.random(n) < pos_ratio).astype(np.float64)
    X = rng.normal(size=(n, len(mu))) + np.outer(2.0 * y - 1.0, mu)
    return X, y


def site_label_ratio(i: int, num_sites: int, skew: float) -> float:
    """Positive-label probability of site ``i``: sites are spread evenly from
    all-negative to all-positive and pulled towards 0.5 by ``1 - skew``."""
    u = 0.5 if num_sites == 1 else i / (num_sites - 1)
    return 0.5 + skew * (u - 0.5)


def make_federation(
    seed: int,
    num_sites: int,
    per_site: int | Sequence[int],
    feature_dim: int,
    skew: float,
    class_separation: float = 2.0,
) -> list[Dataset]:
    """``per_site`` is one size for every site or a per-site list of sizes."""
    sizes = [per_site] * num_sites if isinstance(per_site, int) else list(per_site)
    if num_sites < 1 or len(sizes) != num_sites or min(sizes) < 1 or feature_dim < 1:
        raise ValueError("num_sites, per-site sizes and feature_dim must be >= 1")
    if not 0.0 <= skew <= 1.0:
        raise ValueError("skew must be in [0, 1]")
    mu = _class_mean(seed, feature_dim, class_separation)
    sites = []
    for i in range(num_sites):
        rng = np.random.default_rng([seed, 1, i])
        X, y = _sample(rng, mu, sizes[i], site_label_ratio(i, num_sites, skew))
        sites.append(Dataset(X, y, f"site-{i}"))
    return sites


def make_test_set(seed: int, n: int, feature_dim: int, class_separation: float = 2.0) -> Dataset:
    mu = _class_mean(seed, feature_dim, class_separation)
    X, y = _sample(np.random.default_rng([seed, 2]), mu, n, 0.5)
    return Dataset(X, y, "test")


def federation_descriptor(
    seed: int, num_sites: int, per_site: int | Sequence[int], feature_dim: int, skew: float, class_separation: float = 2.0
) -> str:
    return json.dumps(
        {
            "seed": seed,
            "num_sites": num_sites,
            "per_site": per_site if isinstance(per_site, int) else list(per_site),
            "feature_dim": feature_dim,
            "skew": skew,
            "class_separation": class_separation,
        },
        sort_keys=True,
    )


@dataclass(frozen=True)
class AggregationPolicy:
    """Round policy. ``norm_bound`` is in quantized units; weights are dataset sizes."""

    norm_bound: int
    quorum: int = 1
    round_timeout: int = 4
    max_weight: int = 1_000_000
    weight_mode: str = "dataset-size"
    hash_name: str = DEFAULT_HASH

    def __post_init__(self) -> None:
        if self.quorum < 1:
            raise ValueError("quorum must be >= 1")
        if self.norm_bound <= 0:
            raise ValueError("norm_bound must be > 0")
        if self.round_timeout < 1:
            raise ValueError("round_timeout must be >= 1")

    def to_bytes(self) -> bytes:
        return (
            Writer()
            .text(self.weight_mode)
            .u64(self.norm_bound)
            .u32(self.quorum)
            .u64(self.round_timeout)
            .u64(self.max_weight)
            .text(self.hash_name)
            .getvalue()
        )

    @property
    def policy_id(self) -> bytes:
        return digest(self.to_bytes(), self.hash_name)

    def to_json(self) -> dict:
        return asdict(self)
