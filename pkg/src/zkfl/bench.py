"""Proof and ledger cost sweeps over dimension, client count and backend."""

from __future__ import annotations

import csv
import hashlib
import io
import os
import platform
import statistics
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .crypto import BACKEND as GROUP_BACKEND
from .crypto.group import Scalar
from .crypto.pedersen import commit_vector, setup_params
from .encoding import FixedPointConfig, QuantizedUpdate, encode_ints
from .fl import AggregationPolicy
from .ledger.throughput import WorkloadConfig, measure_throughput
from .protocol.enclave import Contribution, Enclave, EnclaveKeys
from .protocol.messages import RoundHeader
from .protocol.proof import MockBackend, TransparentBackend, VerifierContext, verify_aggregation

DEFAULT_DIMS = tuple(2**k for k in range(6, 15))
DEFAULT_CLIENTS = (2, 4, 8, 16, 32)
BACKENDS = ("transparent", "mock")

BENCH_COLUMNS = (
    "backend",
    "dimension",
    "num_clients",
    "proof_bytes",
    "prove_ms",
    "verify_ms",
    "timing_source",
    "replayed_prove_ms",
    "replayed_verify_ms",
    "ledger_tps",
    "finality_latency_ms",
)


@dataclass(frozen=True)
class SweepConfig:
    dims: tuple[int, ...] = DEFAULT_DIMS
    clients: tuple[int, ...] = DEFAULT_CLIENTS
    backends: tuple[str, ...] = BACKENDS
    repeats: int = 3
    seed: int = 0
    mock_scale: float = 1.0
    ledger_txs: int = 2000

    @classmethod
    def from_json(cls, d: dict[str, Any]) -> "SweepConfig":
        fields = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items() if k != "schema_version"}
        return cls(**fields)


@dataclass(frozen=True)
class BenchRow:
    backend: str
    dimension: int
    num_clients: int
    proof_bytes: int
    prove_ms: float
    verify_ms: float
    timing_source: str
    replayed_prove_ms: float | None
    replayed_verify_ms: float | None
    ledger_tps: float
    finality_latency_ms: float


def _median_ms(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append((time.perf_counter() - t0) * 1000.0)
    return statistics.median(times)


def bench_point(d: int, n_clients: int, backend: str, repeats: int = 3, seed: int = 0, mock_scale: float = 1.0):
    """Build one aggregation of ``n_clients`` random updates and time prove and verify."""
    rng = np.random.default_rng([seed, d, n_clients])
    params = setup_params(d, b"zkfl-bench")
    cfg = FixedPointConfig(d, max_clients=max(n_clients, 1))
    policy = AggregationPolicy(norm_bound=1 << 40)
    be = TransparentBackend() if backend == "transparent" else MockBackend(scale=mock_scale)
    enclave = Enclave(params, cfg, policy, EnclaveKeys.generate(rng), be)
    header = RoundHeader(1, rng.bytes(16), policy.policy_id, bytes(32), 10)
    registry: dict[bytes, bytes] = {}
    accepted: dict[bytes, Contribution] = {}
    for i in range(n_clients):
        cid = hashlib.sha256(b"bench-client-%d" % i).digest()
        registry[cid] = cid
        values = rng.integers(-cfg.scale, cfg.scale, size=d).astype(np.int64)
        r = Scalar.random(rng)
        c = commit_vector(params, encode_ints(values), r)
        accepted[cid] = Contribution(QuantizedUpdate(values, cfg.config_id(), 1), r, int(rng.integers(1, 1000)), c)
    enclave.open_round(header, registry)
    enclave._accepted = accepted

    holder: dict[str, Any] = {}

    def prove() -> None:
        st, r_agg = enclave._build_statement(accepted)
        holder["statement"], holder["proof"] = st, enclave._prove(st, r_agg)

    prove_ms = _median_ms(prove, repeats)
    ctx = VerifierContext(header, registry, 1, policy.policy_id, enclave.public.attest_public)
    ok = verify_aggregation(holder["statement"], holder["proof"], params, ctx)
    if not ok:
        raise AssertionError("benchmark aggregation failed to verify")
    verify_ms = _median_ms(lambda: verify_aggregation(holder["statement"], holder["proof"], params, ctx), repeats)
    return holder["proof"], prove_ms, verify_ms


def run_sweep(cfg: SweepConfig) -> list[BenchRow]:
    tput = measure_throughput(WorkloadConfig(num_txs=cfg.ledger_txs, block_size=500, seed=cfg.seed))
    rows = []
    for backend in cfg.backends:
        for d in cfg.dims:
            for n in cfg.clients:
                proof, p_ms, v_ms = bench_point(d, n, backend, cfg.repeats, cfg.seed, cfg.mock_scale)
                mock = backend == "mock"
                rows.append(
                    BenchRow(
                        backend,
                        d,
                        n,
                        proof.size,
                        p_ms,
                        v_ms,
                        "measured-wall-clock",
                        proof.simulated_prove_ms if mock else None,
                        proof.simulated_verify_ms if mock else None,
                        tput.tps,
                        tput.finality_latency_ms,
                    )
                )
    return rows


def rows_to_csv(rows: Sequence[BenchRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_COLUMNS)
    for r in rows:
        w.writerow(["" if getattr(r, c) is None else getattr(r, c) for c in BENCH_COLUMNS])
    return buf.getvalue()


def r_squared(y: np.ndarray, X: np.ndarray) -> float:
    """Coefficient of determination of an ordinary least-squares fit with intercept."""
    A = np.column_stack([np.ones(len(y)), X])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_tot = float(((y - y.mean()) ** 2).sum())
    return 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0


def scaling_fits(rows: Sequence[BenchRow], backend: str = "transparent") -> dict[str, float]:
    """R² of verify time against several cost models."""
    sel = [r for r in rows if r.backend == backend]
    y = np.array([r.verify_ms for r in sel])
    d = np.array([r.dimension for r in sel], dtype=float)
    n = np.array([r.num_clients for r in sel], dtype=float)
    return {
        "dN": r_squared(y, (d * n)[:, None]),
        "d_plus_N": r_squared(y, np.column_stack([d, n])),
        "bilinear": r_squared(y, np.column_stack([d, n, d * n])),
    }


def code_digest() -> str:
    """Digest of the package sources, identifying the code version in manifests."""
    root = Path(__file__).parent
    h = hashlib.sha256()
    for p in sorted(root.rglob("*.py")):
        h.update(p.relative_to(root).as_posix().encode())
        h.update(p.read_bytes())
    return h.hexdigest()


def machine_manifest() -> dict[str, Any]:
    return {
        "zkfl_version": __version__,
        "code_digest": code_digest(),
        "group_backend": GROUP_BACKEND,
        "python": platform.python_version(),
        "platform": platform.platform(),
        "machine": platform.machine(),
        "cpu_count": os.cpu_count(),
    }
