"""Genesis configuration and the verification-contract state machine.

``Contract.apply`` is a pure transition over canonical tx bytes: it either
mutates state and returns ``""`` or leaves state untouched and returns a
reason code. The ledger and the auditor both drive it, so an audit is a
literal re-execution.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

from ..crypto.hashing import DEFAULT_HASH, SUPPORTED_HASHES, TAG_RECEIPT, TAG_REGISTRAR, digest, tagged_hash
from ..crypto.pedersen import PedersenParams, setup_params
from ..crypto.schnorr import verify_sig
from ..encoding import FixedPointConfig
from ..errors import ConfigError, DecodeError, LedgerError, ZkflError
from ..fl import AggregationPolicy
from ..protocol.client import client_id_of, compute_anchor
from ..protocol.enclave import verify_attestation
from ..protocol.messages import NONCE_SIZE, EnclavePublic, RoundHeader, registry_digest, submission_message
from ..protocol.proof import BACKENDS, VerifierContext, verify_aggregation
from ..serialization import Writer
from .tx import FinalizeRound, GenesisTx, PostCommitment, RegisterIdentity, RejectionReceiptTx, decode_tx

SCHEMA_VERSION = 1

OK = ""
ALREADY_REGISTERED = "already-registered"
UNKNOWN_IDENTITY = "unknown-identity"
DUPLICATE_COMMITMENT = "duplicate-commitment"
STALE_ROUND = "stale-round"
BAD_SIGNATURE = "bad-signature"
PROOF_INVALID = "proof-invalid"
ANCHOR_MISMATCH = "anchor-mismatch"
ATTESTATION_INVALID = "attestation-invalid"
BELOW_QUORUM = "below-quorum"
UNAUTHORIZED_REGISTRAR = "unauthorized-registrar"
ROUND_CLOSED = "round-closed"
MALFORMED = "malformed"

REASON_CODES = (
    ALREADY_REGISTERED,
    UNKNOWN_IDENTITY,
    DUPLICATE_COMMITMENT,
    STALE_ROUND,
    BAD_SIGNATURE,
    PROOF_INVALID,
    ANCHOR_MISMATCH,
    ATTESTATION_INVALID,
    BELOW_QUORUM,
    UNAUTHORIZED_REGISTRAR,
    ROUND_CLOSED,
    MALFORMED,
)


@dataclass(frozen=True)
class GenesisConfig:
    hash_name: str
    pedersen_seed: bytes
    fixed_point: FixedPointConfig
    policy: AggregationPolicy
    proof_backend: str
    enclave: EnclavePublic
    registrar_public: bytes
    initial_registry: tuple[bytes, ...]
    initial_model_hash: bytes
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self) -> None:
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported genesis schema_version {self.schema_version}")
        if self.hash_name not in SUPPORTED_HASHES or self.policy.hash_name != self.hash_name:
            raise ConfigError("hash_name must be supported and match the policy")
        if self.proof_backend not in BACKENDS:
            raise ConfigError(f"unknown proof backend {self.proof_backend!r}")

    @property
    def dimension(self) -> int:
        return self.fixed_point.dimension

    def params(self) -> PedersenParams:
        return setup_params(self.dimension, self.pedersen_seed, self.hash_name)

    def to_json(self) -> dict[str, Any]:
        fp = self.fixed_point
        return {
            "schema_version": self.schema_version,
            "hash_name": self.hash_name,
            "pedersen_seed": self.pedersen_seed.hex(),
            "fixed_point": {
                "dimension": fp.dimension,
                "fractional_bits": fp.fractional_bits,
                "clamp_magnitude": fp.clamp_magnitude,
                "max_clients": fp.max_clients,
                "max_weight": fp.max_weight,
            },
            "policy": self.policy.to_json(),
            "proof_backend": self.proof_backend,
            "enclave": self.enclave.to_json(),
            "registrar_public": self.registrar_public.hex(),
            "initial_registry": [pk.hex() for pk in self.initial_registry],
            "initial_model_hash": self.initial_model_hash.hex(),
        }

    @classmethod
    def from_json(cls, d: Mapping[str, Any]) -> "GenesisConfig":
        try:
            return cls(
                schema_version=int(d["schema_version"]),
                hash_name=str(d["hash_name"]),
                pedersen_seed=bytes.fromhex(d["pedersen_seed"]),
                fixed_point=FixedPointConfig(**d["fixed_point"]),
                policy=AggregationPolicy(**d["policy"]),
                proof_backend=str(d["proof_backend"]),
                enclave=EnclavePublic.from_json(d["enclave"]),
                registrar_public=bytes.fromhex(d["registrar_public"]),
                initial_registry=tuple(bytes.fromhex(pk) for pk in d["initial_registry"]),
                initial_model_hash=bytes.fromhex(d["initial_model_hash"]),
            )
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError, ZkflError) as exc:
            raise ConfigError(f"bad genesis document: {exc}") from exc

    def canonical_bytes(self) -> bytes:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":")).encode()

    def digest(self) -> bytes:
        return digest(self.canonical_bytes(), self.hash_name)


@dataclass(frozen=True)
class FinalizedRound:
    round_t: int
    header: RoundHeader
    statement_hash: bytes
    model_hash: bytes
    participants: tuple[bytes, ...]
    tx_hash: bytes
    proof_ok: bool = True

    def to_bytes(self) -> bytes:
        w = Writer().u64(self.round_t).raw(self.header.to_bytes()).fixed(self.statement_hash, 32)
        w.fixed(self.model_hash, 32).items(self.participants, lambda w, c: w.fixed(c, 32))
        return w.fixed(self.tx_hash, 32).u8(int(self.proof_ok)).getvalue()


def round_nonce(genesis_digest: bytes, prev_statement_hash: bytes, round_t: int, hash_name: str) -> bytes:
    t = round_t.to_bytes(8, "little")
    return tagged_hash(b"zkfl/round-nonce", genesis_digest, prev_statement_hash, t, hash_name=hash_name)[:NONCE_SIZE]


@dataclass
class ContractState:
    registry: dict[bytes, bytes]
    open_round: RoundHeader
    round_registry: dict[bytes, bytes]
    commitments: dict[tuple[int, bytes], bytes] = field(default_factory=dict)
    receipts: dict[tuple[int, bytes], str] = field(default_factory=dict)
    finalized: dict[int, FinalizedRound] = field(default_factory=dict)


class Contract:
    """The verification contract. ``verify_proofs=False`` exists only for the
    harness self-test, which must observe an undetected tamper."""

    def __init__(
        self,
        genesis: GenesisConfig,
        *,
        verify_proofs: bool = True,
        cache: dict[bytes, bool] | None = None,
    ) -> None:
        self.genesis = genesis
        self.hash_name = genesis.hash_name
        self.genesis_digest = genesis.digest()
        self.params = genesis.params()
        self.verify_proofs = verify_proofs
        self._cache = cache
        self._genesis_applied = False
        registry = {client_id_of(pk, self.hash_name): pk for pk in genesis.initial_registry}
        header = self._header(1, b"", genesis.initial_model_hash, tick=0)
        self.state = ContractState(registry, header, dict(registry))

    def _header(self, round_t: int, prev_statement_hash: bytes, prev_model_hash: bytes, tick: int) -> RoundHeader:
        return RoundHeader(
            round_t,
            round_nonce(self.genesis_digest, prev_statement_hash, round_t, self.hash_name),
            self.genesis.policy.policy_id,
            prev_model_hash,
            tick + self.genesis.policy.round_timeout,
        )

    def _memo(self, parts: tuple[bytes, ...], check: Callable[[], bool]) -> bool:
        # Pure checks are keyed by their exact inputs, so replays reuse results.
        if self._cache is None:
            return check()
        key = tagged_hash(b"zkfl/audit-memo", self.genesis_digest, *parts, hash_name=self.hash_name)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._cache[key] = check()
        return hit

    def _sig_ok(self, pub: bytes, msg: bytes, sig: bytes, domain: bytes | None = None) -> bool:
        kwargs = {"hash_name": self.hash_name}
        if domain is not None:
            kwargs["domain"] = domain
        return self._memo(
            (b"sig", pub, msg, sig, domain or b""), lambda: verify_sig(pub, msg, sig, **kwargs)
        )

    # -- transitions ---------------------------------------------------------

    def apply(self, tx_bytes: bytes, tick: int) -> str:
        try:
            tx = decode_tx(tx_bytes)
        except (DecodeError, ZkflError, ValueError):
            return MALFORMED
        if isinstance(tx, GenesisTx):
            if self._genesis_applied or tx.genesis_digest != self.genesis_digest:
                return MALFORMED
            self._genesis_applied = True
            return OK
        if not self._genesis_applied:
            return MALFORMED
        if isinstance(tx, RegisterIdentity):
            return self._register(tx)
        if isinstance(tx, PostCommitment):
            return self._post(tx, tick)
        if isinstance(tx, RejectionReceiptTx):
            return self._receipt(tx)
        return self._finalize(tx, tx_bytes, tick)

    def _register(self, tx: RegisterIdentity) -> str:
        if not self._sig_ok(self.genesis.registrar_public, tx.signed_bytes(), tx.registrar_signature, TAG_REGISTRAR):
            return UNAUTHORIZED_REGISTRAR
        cid = client_id_of(tx.public_key, self.hash_name)
        if cid in self.state.registry:
            return ALREADY_REGISTERED
        self.state.registry[cid] = tx.public_key
        return OK

    def _post(self, tx: PostCommitment, tick: int) -> str:
        st = self.state
        header = st.open_round
        if tx.round_t != header.round_t:
            return STALE_ROUND
        if tick > header.deadline:
            return ROUND_CLOSED
        pub = st.round_registry.get(tx.client_id)
        if pub is None:
            return UNKNOWN_IDENTITY
        if not self._sig_ok(pub, submission_message(header, tx.anchor), tx.signature):
            return BAD_SIGNATURE
        key = (tx.round_t, tx.client_id)
        if key in st.commitments:
            return DUPLICATE_COMMITMENT
        st.commitments[key] = tx.anchor
        return OK

    def _receipt(self, tx: RejectionReceiptTx) -> str:
        st = self.state
        rc = tx.receipt
        if rc.round_t != st.open_round.round_t:
            return STALE_ROUND
        if rc.accepted or not self._sig_ok(
            self.genesis.enclave.attest_public, rc.signed_bytes(), rc.signature, TAG_RECEIPT
        ):
            return BAD_SIGNATURE
        key = (rc.round_t, rc.client_id)
        if st.commitments.get(key) != rc.anchor:
            return ANCHOR_MISMATCH
        if key in st.receipts:
            return DUPLICATE_COMMITMENT
        st.receipts[key] = rc.reason
        return OK

    def _finalize(self, tx: FinalizeRound, tx_bytes: bytes, tick: int) -> str:
        st = self.state
        header = st.open_round
        stmt = tx.statement
        t = header.round_t
        if stmt.header != header:
            return STALE_ROUND
        if len(stmt.participants) < self.genesis.policy.quorum:
            return BELOW_QUORUM
        if any(p.client_id not in st.round_registry for p in stmt.participants):
            return UNKNOWN_IDENTITY
        included = set()
        for p in stmt.participants:
            key = (t, p.client_id)
            onchain = st.commitments.get(key)
            if onchain is None or key in st.receipts:
                return ANCHOR_MISMATCH
            if compute_anchor(header, p.commitment, p.weight, p.client_id, self.hash_name) != onchain:
                return ANCHOR_MISMATCH
            included.add(p.client_id)
        # Inclusion rule: every on-chain anchor is either aggregated or
        # justified by an enclave rejection receipt.
        for rt, cid in st.commitments:
            if rt == t and cid not in included and (t, cid) not in st.receipts:
                return ANCHOR_MISMATCH
        if self.verify_proofs and not self._proof_ok(tx):
            return PROOF_INVALID
        if not self._memo(
            (b"att", tx.attestation.to_bytes(), stmt.to_bytes(), tx.model_hash),
            lambda: verify_attestation(tx.attestation, stmt, tx.model_hash, self.genesis.enclave, self.hash_name),
        ):
            return ATTESTATION_INVALID
        sh = stmt.statement_hash(self.hash_name)
        st.finalized[t] = FinalizedRound(
            t, header, sh, tx.model_hash, tuple(sorted(included)), digest(tx_bytes, self.hash_name)
        )
        st.open_round = self._header(t + 1, sh, tx.model_hash, tick)
        st.round_registry = dict(st.registry)
        return OK

    def _proof_ok(self, tx: FinalizeRound) -> bool:
        st = self.state
        if tx.proof.backend != self.genesis.proof_backend:
            return False
        ctx = VerifierContext(
            expected_header=st.open_round,
            registry=st.round_registry,
            quorum=self.genesis.policy.quorum,
            policy_id=self.genesis.policy.policy_id,
            enclave_attest_public=self.genesis.enclave.attest_public,
        )
        parts = (
            b"proof",
            tx.statement.to_bytes(),
            tx.proof.to_bytes(),
            st.open_round.to_bytes(),
            registry_digest(st.round_registry, self.hash_name),
        )
        return self._memo(parts, lambda: verify_aggregation(tx.statement, tx.proof, self.params, ctx))

    # -- read-only views -----------------------------------------------------

    def get_model_hash(self, round_t: int) -> bytes:
        rec = self.state.finalized.get(round_t)
        if rec is None:
            raise LedgerError("unknown-round", f"round {round_t} is not finalized")
        return rec.model_hash
