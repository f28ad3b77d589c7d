"""Simulated confidential aggregator.

The enclave's only inputs are client submissions; its only outputs are
signed receipts, rejection reasons and the round result (Δ, statement,
proof, attestation). Plaintext updates and blindings live in ``_accepted``
and are never returned.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey

from ..crypto.group import ORDER, RandomSource, Scalar
from ..crypto.hashing import DEFAULT_HASH, TAG_ATTEST, TAG_RECEIPT, tagged_hash
from ..crypto.pedersen import Commitment, PedersenParams, combine, commit_vector
from ..crypto.schnorr import KeyPair, keygen, sign, verify_sig
from ..encoding import FixedPointConfig, QuantizedUpdate, encode_ints, l2_norm_squared
from ..errors import DecodeError, EncodingError, ProtocolError
from ..fl import AggregationPolicy, ModelParams
from .client import client_id_of, compute_anchor, seal_aad
from .messages import (
    AggregationProof,
    AggregationStatement,
    Attestation,
    ClientSubmission,
    EnclavePublic,
    EnclaveReceipt,
    Participant,
    RoundHeader,
    registry_digest,
    submission_message,
)
from .proof import TransparentBackend
from .sealing import SealError, public_bytes, seal_keypair, unseal

CODE_VERSION = b"zkfl-enclave/1"

REJECT_ROUND_CLOSED = "round-closed"
REJECT_STALE = "stale-round"
REJECT_UNKNOWN = "unknown-client"
REJECT_SIGNATURE = "bad-signature"
REJECT_DUPLICATE = "duplicate-client"
REJECT_COMMITMENT = "commitment-mismatch"
REJECT_WEIGHT = "weight-invalid"
REJECT_NORM = "norm-exceeded"

# Rejections of an authenticated, first submission: the client's on-chain
# anchor is legitimately omitted, so the receipt is posted to the ledger.
ATTRIBUTABLE = frozenset({REJECT_COMMITMENT, REJECT_WEIGHT, REJECT_NORM})


@dataclass(frozen=True)
class EnclaveKeys:
    seal: X25519PrivateKey
    attest: KeyPair

    @classmethod
    def generate(cls, rng: RandomSource, hash_name: str = DEFAULT_HASH) -> "EnclaveKeys":
        return cls(seal_keypair(rng), keygen(rng.bytes(32), hash_name))


def enclave_measurement(policy_id: bytes, hash_name: str = DEFAULT_HASH) -> bytes:
    return tagged_hash(b"zkfl/measurement", CODE_VERSION, policy_id, hash_name=hash_name)


@dataclass(frozen=True)
class IngestResult:
    accepted: bool
    reason: str
    receipt: EnclaveReceipt

    @property
    def attributable(self) -> bool:
        return not self.accepted and self.reason in ATTRIBUTABLE


@dataclass(frozen=True, eq=False)
class RoundOutput:
    delta: np.ndarray
    model: ModelParams
    model_hash: bytes
    statement: AggregationStatement
    proof: AggregationProof
    attestation: Attestation
    prove_ms: float


@dataclass
class Contribution:
    update: QuantizedUpdate
    blinding: Scalar
    weight: int
    commitment: Commitment


class Enclave:
    def __init__(
        self,
        params: PedersenParams,
        cfg: FixedPointConfig,
        policy: AggregationPolicy,
        keys: EnclaveKeys,
        backend=None,
    ) -> None:
        self.params = params
        self.cfg = cfg
        self.policy = policy
        self._keys = keys
        self.backend = backend or TransparentBackend()
        self.hash_name = params.hash_name
        self._header: RoundHeader | None = None
        self._registry: dict[bytes, bytes] = {}
        self._open = False
        self._accepted: dict[bytes, Contribution] = {}
        self._seen: set[bytes] = set()

    @property
    def measurement(self) -> bytes:
        return enclave_measurement(self.policy.policy_id, self.hash_name)

    @property
    def public(self) -> EnclavePublic:
        return EnclavePublic(public_bytes(self._keys.seal), self._keys.attest.public.to_bytes(), self.measurement)

    @property
    def header(self) -> RoundHeader | None:
        return self._header

    @property
    def accepted_count(self) -> int:
        return len(self._accepted)

    def open_round(self, header: RoundHeader, registry: Mapping[bytes, bytes]) -> None:
        """Start a round against a snapshot of the on-chain identity registry."""
        self._header = header
        self._registry = dict(registry)
        self._accepted = {}
        self._seen = set()
        self._open = True

    def close_round(self) -> None:
        self._open = False

    def _receipt(self, sub: ClientSubmission, accepted: bool, reason: str) -> IngestResult:
        rc = EnclaveReceipt(sub.round_t, sub.client_id, sub.anchor, accepted, reason)
        sig = sign(self._keys.attest.secret, rc.signed_bytes(), domain=TAG_RECEIPT, hash_name=self.hash_name)
        return IngestResult(accepted, reason, EnclaveReceipt(rc.round_t, rc.client_id, rc.anchor, accepted, reason, sig.to_bytes()))

    def ingest(self, sub: ClientSubmission) -> IngestResult:
        reason = self._check(sub)
        return self._receipt(sub, reason == "", reason)

    def _check(self, sub: ClientSubmission) -> str:
        header = self._header
        if header is None or not self._open:
            return REJECT_ROUND_CLOSED
        if sub.round_t != header.round_t:
            return REJECT_STALE
        pub = self._registry.get(sub.client_id)
        if pub is None or client_id_of(pub, self.hash_name) != sub.client_id:
            return REJECT_UNKNOWN
        if not verify_sig(pub, submission_message(header, sub.anchor), sub.signature, hash_name=self.hash_name):
            return REJECT_SIGNATURE
        if sub.client_id in self._seen:
            return REJECT_DUPLICATE
        self._seen.add(sub.client_id)
        if not 0 < sub.weight <= min(self.policy.max_weight, self.cfg.max_weight):
            return REJECT_WEIGHT
        try:
            plain = unseal(self._keys.seal, sub.sealed_payload, seal_aad(sub.client_id, sub.round_t))
            qu = QuantizedUpdate.from_bytes(plain[:-32])
            r = Scalar.from_bytes(plain[-32:])
        except (SealError, DecodeError):
            return REJECT_COMMITMENT
        if (
            qu.config_id != self.cfg.config_id()
            or qu.round_t != header.round_t
            or qu.values.shape != (self.params.dimension,)
            or np.any(np.abs(qu.values) > self.cfg.clamp_int)
        ):
            return REJECT_COMMITMENT
        if commit_vector(self.params, encode_ints(qu.values), r) != sub.commitment:
            return REJECT_COMMITMENT
        if compute_anchor(header, sub.commitment, sub.weight, sub.client_id, self.hash_name) != sub.anchor:
            return REJECT_COMMITMENT
        if l2_norm_squared(qu) > self.policy.norm_bound**2:
            return REJECT_NORM
        self._accepted[sub.client_id] = Contribution(qu, r, sub.weight, sub.commitment)
        return ""

    def aggregate_and_prove(self, prev_model: ModelParams) -> RoundOutput:
        header = self._header
        if header is None:
            raise ProtocolError("round-failed", "no round open")
        if len(self._accepted) < self.policy.quorum:
            raise ProtocolError(
                "round-failed", f"quorum: {len(self._accepted)} accepted < {self.policy.quorum} required"
            )
        if len(self._accepted) > self.cfg.max_clients:
            raise EncodingError("overflow-risk", "more contributors than the encoding bound allows")
        self.close_round()
        t0 = time.perf_counter()
        statement, r_agg = self._build_statement(self._accepted)
        proof = self._prove(statement, r_agg)
        return self._publish(statement, proof, prev_model, (time.perf_counter() - t0) * 1000.0)

    def _build_statement(self, accepted: Mapping[bytes, Contribution]) -> tuple[AggregationStatement, Scalar]:
        header = self._header
        assert header is not None
        ids = sorted(accepted)
        contribs = [accepted[c] for c in ids]
        weights = [c.weight for c in contribs]
        delta_q = np.zeros(self.params.dimension, dtype=np.int64)
        r_agg = 0
        for c in contribs:
            delta_q += c.weight * c.update.values
            r_agg = (r_agg + c.weight * c.blinding.value) % ORDER
        statement = AggregationStatement(
            header=header,
            participants=tuple(Participant(cid, c.commitment, c.weight) for cid, c in zip(ids, contribs)),
            total_weight=sum(weights),
            aggregate=delta_q,
            aggregate_commitment=combine([c.commitment for c in contribs], weights),
            policy_id=self.policy.policy_id,
            registry_digest=registry_digest(self._registry, self.hash_name),
        )
        return statement, Scalar(r_agg)

    def _prove(self, statement: AggregationStatement, r_agg: Scalar) -> AggregationProof:
        return self.backend.prove(statement, r_agg, attest_secret=self._keys.attest.secret, hash_name=self.hash_name)

    def _publish(
        self, statement: AggregationStatement, proof: AggregationProof, prev_model: ModelParams, prove_ms: float
    ) -> RoundOutput:
        """Derive the new model from the statement's aggregate and attest to both."""
        delta = statement.aggregate.astype(np.float64) / self.cfg.scale / statement.total_weight
        model = ModelParams(prev_model.weights + delta, prev_model.kind)
        model_hash = model.model_hash(self.hash_name)
        att = Attestation(self.measurement, statement.statement_hash(self.hash_name), model_hash, True)
        sig = sign(self._keys.attest.secret, att.signed_bytes(), domain=TAG_ATTEST, hash_name=self.hash_name)
        att = Attestation(att.enclave_measurement, att.statement_hash, att.model_hash, True, sig.to_bytes())
        return RoundOutput(delta, model, model_hash, statement, proof, att, prove_ms)


def verify_attestation(
    att: Attestation,
    statement: AggregationStatement,
    model_hash: bytes,
    enclave: EnclavePublic,
    hash_name: str = DEFAULT_HASH,
) -> bool:
    return (
        att.enclave_measurement == enclave.measurement
        and att.statement_hash == statement.statement_hash(hash_name)
        and att.model_hash == model_hash
        and att.norm_checks_passed
        and verify_sig(enclave.attest_public, att.signed_bytes(), att.signature, domain=TAG_ATTEST, hash_name=hash_name)
    )


def verify_receipt(rc: EnclaveReceipt, enclave: EnclavePublic, hash_name: str = DEFAULT_HASH) -> bool:
    return verify_sig(enclave.attest_public, rc.signed_bytes(), rc.signature, domain=TAG_RECEIPT, hash_name=hash_name)
