"""Synthetic ledger workload for submit/commit throughput measurements."""

from __future__ import annotations

import platform
import time
from dataclasses import dataclass
from typing import Any

from ..crypto.group import Scalar
from ..crypto.hashing import DEFAULT_HASH
from ..crypto.schnorr import keygen, sign
from ..encoding import FixedPointConfig
from ..fl import AggregationPolicy
from ..protocol.client import client_id_of
from ..protocol.messages import EnclavePublic, submission_message
from .chain import Ledger
from .contract import GenesisConfig
from .tx import PostCommitment


@dataclass(frozen=True)
class WorkloadConfig:
    num_txs: int = 10_000
    block_size: int = 500
    hash_name: str = DEFAULT_HASH
    seed: int = 0


@dataclass(frozen=True)
class ThroughputReport:
    num_txs: int
    accepted: int
    block_size: int
    elapsed_s: float
    tps: float
    finality_latency_ms: float
    finality_ticks: int
    manifest: dict[str, Any]

    def to_json(self) -> dict[str, Any]:
        return dict(self.__dict__)


def _workload_genesis(n_clients: int, cfg: WorkloadConfig) -> tuple[GenesisConfig, list]:
    keys = [keygen(f"tput-{cfg.seed}-{i}".encode(), cfg.hash_name) for i in range(n_clients)]
    enclave_key = keygen(f"tput-enclave-{cfg.seed}".encode(), cfg.hash_name)
    registrar = keygen(f"tput-registrar-{cfg.seed}".encode(), cfg.hash_name)
    genesis = GenesisConfig(
        hash_name=cfg.hash_name,
        pedersen_seed=b"throughput",
        fixed_point=FixedPointConfig(dimension=1),
        policy=AggregationPolicy(norm_bound=1, round_timeout=1 << 40, hash_name=cfg.hash_name),
        proof_backend="transparent",
        enclave=EnclavePublic(bytes(32), enclave_key.public.to_bytes(), bytes(32)),
        registrar_public=registrar.public.to_bytes(),
        initial_registry=tuple(k.public.to_bytes() for k in keys),
        initial_model_hash=bytes(32),
    )
    return genesis, keys


def measure_throughput(workload: WorkloadConfig) -> ThroughputReport:
    """Time ``num_txs`` signed PostCommitments through submit and block commit.

    Transactions are prepared before the clock starts; the figure covers the
    contract (signature check plus state update) and block sealing only.
    Finality latency is the mean wall time from submission to inclusion in a
    sealed block; in this single-writer simulator it is one block interval.
    """
    n = workload.num_txs
    manifest = {"python": platform.python_version(), "machine": platform.machine(), "measured": True}
    if n <= 0:
        return ThroughputReport(0, 0, workload.block_size, 0.0, 0.0, 0.0, 0, manifest)
    genesis, keys = _workload_genesis(n, workload)
    ledger = Ledger(genesis)
    header = ledger.open_round()
    txs = []
    for i, kp in enumerate(keys):
        anchor = Scalar.from_int(i + 1).to_bytes()
        sig = sign(kp.secret, submission_message(header, anchor), hash_name=workload.hash_name).to_bytes()
        txs.append(PostCommitment(client_id_of(kp.public.to_bytes(), workload.hash_name), 1, anchor, sig))
    accepted = 0
    latency_sum = 0.0
    batch_start: list[float] = []
    t0 = time.perf_counter()
    for tx in txs:
        batch_start.append(time.perf_counter())
        accepted += ledger.submit_tx(tx).ok
        if len(batch_start) >= workload.block_size:
            ledger.produce_block()
            done = time.perf_counter()
            latency_sum += sum(done - s for s in batch_start)
            batch_start = []
    if batch_start:
        ledger.produce_block()
        done = time.perf_counter()
        latency_sum += sum(done - s for s in batch_start)
    elapsed = time.perf_counter() - t0
    return ThroughputReport(
        num_txs=n,
        accepted=accepted,
        block_size=workload.block_size,
        elapsed_s=elapsed,
        tps=n / elapsed if elapsed > 0 else 0.0,
        finality_latency_ms=latency_sum / n * 1000.0,
        finality_ticks=1,
        manifest=manifest,
    )
