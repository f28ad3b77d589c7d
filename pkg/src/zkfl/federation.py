"""End-to-end verified federation: clients, enclave and ledger wired into rounds.

Each round trains every online client from the current global model, posts
anchors, ingests sealed submissions, aggregates with a proof, and finalizes on
the ledger. A seed-matched plain FedAvg run (the *shadow*) advances in
lockstep so utility parity can be measured.

All randomness derives from the configured seed, so a run is reproducible
byte for byte. ``RoundHooks`` lets a harness substitute hostile behaviour at
the client channel, the aggregator output and model distribution.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config import ExperimentConfig
from .crypto.hashing import digest, tagged_hash
from .crypto.pedersen import setup_params
from .crypto.schnorr import keygen
from .errors import EncodingError, ProtocolError
from .fl import Dataset, ModelParams, evaluate, fedavg_aggregate, local_train, make_federation, make_model, make_test_set
from .ledger.chain import Ledger, Receipt, Rejected
from .ledger.contract import GenesisConfig
from .ledger.tx import FinalizeRound, PostCommitment, RejectionReceiptTx
from .protocol.client import ClientIdentity, Opening, client_prepare_submission, client_verify_distribution
from .protocol.enclave import Enclave, EnclaveKeys, IngestResult, RoundOutput
from .protocol.messages import ClientSubmission, RoundHeader
from .protocol.proof import MockBackend, TransparentBackend, VerifierContext, verify_aggregation


class RoundFailed(ProtocolError):
    def __init__(self, reason: str, message: str = "") -> None:
        super().__init__("round-failed", f"{reason}: {message}" if message else reason)
        self.reason = reason


def derive_seed(*parts: int) -> int:
    """A 63-bit integer seed from an integer path (stable across platforms)."""
    data = b"".join(int(p).to_bytes(8, "little") for p in parts)
    return int.from_bytes(digest(data)[:8], "little") >> 1


def stream(*parts: int) -> np.random.Generator:
    """Deterministic byte source for keys, blindings and seal ephemerals."""
    return np.random.default_rng(list(parts))


class RoundHooks:
    """Identity hooks. Subclass to deviate at one trust boundary."""

    def submissions(
        self, fed: "Federation", header: RoundHeader, subs: list[ClientSubmission]
    ) -> list[ClientSubmission]:
        return subs

    def output(self, fed: "Federation", out: RoundOutput) -> RoundOutput:
        return out

    def distribute(self, fed: "Federation", model: ModelParams, client_index: int) -> ModelParams:
        return model


@dataclass
class RoundEvents:
    """Everything observable about one round, kept even when the round fails."""

    round_t: int
    contract_rejections: list[dict] = field(default_factory=list)
    enclave_rejections: list[dict] = field(default_factory=list)
    distribution_ok: bool | None = None
    received_model_hash: bytes | None = None

    @property
    def clean(self) -> bool:
        return not self.contract_rejections and not self.enclave_rejections and self.distribution_ok is not False


@dataclass
class RoundRecord:
    round_t: int
    accuracy: float
    auc: float | None
    shadow_accuracy: float
    shadow_auc: float | None
    accepted: int
    enclave_rejections: list[dict]
    contract_rejections: list[dict]
    proof_bytes: int
    ledger_txs: int
    finality_ticks: int
    parity_gap_l1: float
    model_gap_l1: float
    prove_ms: float
    verify_ms: float
    replayed_prove_ms: float | None
    replayed_verify_ms: float | None
    distribution_ok: bool
    finalize_height: int


@dataclass
class Client:
    index: int
    identity: ClientIdentity
    data: Dataset
    openings: dict[int, Opening] = field(default_factory=dict)

    @property
    def weight(self) -> int:
        return len(self.data)


class Federation:
    def __init__(
        self,
        cfg: ExperimentConfig,
        *,
        verify_proofs: bool = True,
        enclave_cls: type[Enclave] = Enclave,
    ) -> None:
        self.cfg = cfg
        seed = cfg.seed
        hn = self.hash_name = cfg.hash_name
        fed = cfg.federation
        self.model = make_model(cfg.model.kind, fed.feature_dim, cfg.model.hidden)
        sites = make_federation(seed, fed.num_sites, cfg.site_sizes, fed.feature_dim, fed.skew, fed.class_separation)
        self.test = make_test_set(seed, fed.test_size, fed.feature_dim, fed.class_separation)
        self.fixed_point = cfg.fixed_point()
        self.policy = cfg.aggregation_policy()
        self.params = setup_params(cfg.dimension, b"zkfl-pedersen/%d" % seed, hn)
        backend = TransparentBackend() if cfg.backend == "transparent" else MockBackend(scale=cfg.mock_scale)
        keys = EnclaveKeys.generate(stream(seed, 10), hn)
        self.enclave = enclave_cls(self.params, self.fixed_point, self.policy, keys, backend)
        self.registrar = keygen(tagged_hash(b"zkfl/registrar-seed", seed.to_bytes(8, "little"), hash_name=hn), hn)
        self.clients: list[Client] = []
        for i, data in enumerate(sites):
            ident = ClientIdentity.from_seed(self.client_seed(i), hn)
            ident.registered = True
            self.clients.append(Client(i, ident, data))
        W0 = self.model.init_params(stream(seed, 3))
        self.W = W0.copy()
        self.W_shadow = W0.copy()
        self.genesis = GenesisConfig(
            hash_name=hn,
            pedersen_seed=self.params.seed,
            fixed_point=self.fixed_point,
            policy=self.policy,
            proof_backend=cfg.backend,
            enclave=self.enclave.public,
            registrar_public=self.registrar.public.to_bytes(),
            initial_registry=tuple(c.identity.public_key for c in self.clients),
            initial_model_hash=ModelParams(W0, self.model.kind).model_hash(hn),
        )
        self.ledger = Ledger(self.genesis, verify_proofs=verify_proofs)
        self.online: set[int] = set(range(len(self.clients)))
        self.observer = 0
        self.records: list[RoundRecord] = []
        self.last_submissions: list[ClientSubmission] = []
        self.last_output: RoundOutput | None = None
        self.events = RoundEvents(0)

    def client_seed(self, i: int) -> bytes:
        return tagged_hash(b"zkfl/client-seed", self.cfg.seed.to_bytes(8, "little"), i.to_bytes(4, "little"))

    @property
    def model_params(self) -> ModelParams:
        return ModelParams(self.W, self.model.kind)

    # -- round steps ---------------------------------------------------------

    def train(self, W: np.ndarray, round_t: int, indices: Sequence[int]) -> list[np.ndarray]:
        def one(i: int) -> np.ndarray:
            tc = self.cfg.train_config(derive_seed(self.cfg.seed, round_t, i))
            return local_train(W, self.clients[i].data, tc, self.model)

        if self.cfg.workers > 1 and len(indices) > 1:
            with ThreadPoolExecutor(max_workers=self.cfg.workers) as pool:
                return list(pool.map(one, indices))
        return [one(i) for i in indices]

    def prepare(self, header: RoundHeader, index: int, update: np.ndarray, **kwargs) -> ClientSubmission:
        c = self.clients[index]
        sub, opening = client_prepare_submission(
            c.identity,
            update,
            header,
            self.enclave.public.seal_public,
            self.fixed_point,
            params=self.params,
            weight=kwargs.pop("weight", c.weight),
            rng=stream(self.cfg.seed, 20, header.round_t, index),
            **kwargs,
        )
        c.openings[header.round_t] = opening
        return sub

    def post_anchor(self, sub: ClientSubmission) -> Receipt | Rejected:
        return self.ledger.submit_tx(PostCommitment(sub.client_id, sub.round_t, sub.anchor, sub.signature))

    def index_of(self, client_id: bytes) -> int | None:
        for c in self.clients:
            if c.identity.client_id == client_id:
                return c.index
        return None

    def run_round(self, hooks: RoundHooks | None = None) -> RoundRecord:
        hooks = hooks or RoundHooks()
        ledger, enclave, hn = self.ledger, self.enclave, self.hash_name
        header = ledger.open_round()
        t = header.round_t
        opened_at = header.deadline - self.policy.round_timeout
        enclave.open_round(header, ledger.round_registry())
        ev = self.events = RoundEvents(t)
        n_txs = 0

        def submit(tx) -> Receipt | Rejected:
            nonlocal n_txs
            n_txs += 1
            res = ledger.submit_tx(tx)
            if not res.ok:
                ev.contract_rejections.append(
                    {"tx": type(tx).__name__, "reason": res.reason, "tx_hash": res.tx_hash.hex(), "height": res.tick}
                )
            return res

        indices = sorted(self.online)
        updates = dict(zip(indices, self.train(self.W, t, indices)))
        subs = [self.prepare(header, i, updates[i]) for i in indices]
        subs = hooks.submissions(self, header, subs)
        self.last_submissions = subs
        for s in subs:
            submit(PostCommitment(s.client_id, s.round_t, s.anchor, s.signature))
        ledger.produce_block()

        results: list[IngestResult] = [enclave.ingest(s) for s in subs]
        for s, r in zip(subs, results):
            if r.accepted:
                continue
            entry = {"client_id": s.client_id.hex(), "reason": r.reason, "receipt_tx_hash": None, "height": None}
            if r.attributable:
                res = submit(RejectionReceiptTx(r.receipt))
                if res.ok:
                    entry.update(receipt_tx_hash=res.tx_hash.hex(), height=res.tick)
            ev.enclave_rejections.append(entry)
        try:
            out = enclave.aggregate_and_prove(self.model_params)
        except (ProtocolError, EncodingError) as exc:
            ledger.produce_block()
            raise RoundFailed("quorum" if "quorum" in str(exc) else exc.code, str(exc)) from exc
        out = hooks.output(self, out)
        self.last_output = out

        ctx = VerifierContext(
            expected_header=header,
            registry=ledger.round_registry(),
            quorum=self.policy.quorum,
            policy_id=self.policy.policy_id,
            enclave_attest_public=self.genesis.enclave.attest_public,
        )
        v0 = time.perf_counter()
        verify_aggregation(out.statement, out.proof, self.params, ctx)
        verify_ms = (time.perf_counter() - v0) * 1000.0

        fin = submit(FinalizeRound(out.statement, out.proof, out.attestation, out.model_hash))
        block = ledger.produce_block()
        if not fin.ok:
            raise RoundFailed(fin.reason, f"round {t} finalization rejected")

        self.W = out.model.weights.copy()
        received = hooks.distribute(self, out.model, self.observer)
        distribution_ok = ev.distribution_ok = client_verify_distribution(header, received, ledger, hn)
        ev.received_model_hash = received.model_hash(hn)

        accepted_idx = [self.index_of(p.client_id) for p in out.statement.participants]
        honest = [updates[i] for i in accepted_idx if i in updates]
        parity = float("nan")
        if len(honest) == len(accepted_idx):
            plain = fedavg_aggregate(honest, [self.clients[i].weight for i in accepted_idx])
            parity = float(np.abs(out.delta - plain).sum())

        shadow_updates = self.train(self.W_shadow, t, indices)
        self.W_shadow = self.W_shadow + fedavg_aggregate(shadow_updates, [self.clients[i].weight for i in indices])

        m = evaluate(self.W, self.test, self.model)
        ms = evaluate(self.W_shadow, self.test, self.model)
        mock = out.proof.backend == "mock"
        rec = RoundRecord(
            round_t=t,
            accuracy=m.accuracy,
            auc=m.auc,
            shadow_accuracy=ms.accuracy,
            shadow_auc=ms.auc,
            accepted=len(out.statement.participants),
            enclave_rejections=ev.enclave_rejections,
            contract_rejections=ev.contract_rejections,
            proof_bytes=out.proof.size,
            ledger_txs=n_txs,
            finality_ticks=block.height - opened_at,
            parity_gap_l1=parity,
            model_gap_l1=float(np.abs(self.W - self.W_shadow).sum()),
            prove_ms=out.prove_ms,
            verify_ms=verify_ms,
            replayed_prove_ms=out.proof.simulated_prove_ms if mock else None,
            replayed_verify_ms=out.proof.simulated_verify_ms if mock else None,
            distribution_ok=distribution_ok,
            finalize_height=block.height,
        )
        self.records.append(rec)
        return rec

    def run(self, rounds: int | None = None, hooks: RoundHooks | None = None) -> list[RoundRecord]:
        for _ in range(rounds or self.cfg.rounds):
            self.run_round(hooks)
        return self.records
