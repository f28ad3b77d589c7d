"""Protocol messages with canonical framed encodings and JSON debug views.

Nothing defined here carries a plaintext update or a per-client blinding
factor; those exist only inside the sealed payload and the enclave.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..crypto.hashing import DEFAULT_HASH, TAG_ATTEST, TAG_RECEIPT, digest
from ..crypto.pedersen import Commitment
from ..serialization import Reader, Writer, frame, unframe

MSG_ROUND_HEADER = 1
MSG_SUBMISSION = 2
MSG_STATEMENT = 3
MSG_PROOF = 4
MSG_ATTESTATION = 5
MSG_REJECTION_RECEIPT = 6
MSG_INCLUSION_RECEIPT = 7
MSG_ENCLAVE_PUBLIC = 8

NONCE_SIZE = 16


@dataclass(frozen=True)
class RoundHeader:
    round_t: int
    round_nonce: bytes
    policy_id: bytes
    prev_model_hash: bytes
    deadline: int

    def write(self, w: Writer) -> Writer:
        return (
            w.u64(self.round_t)
            .fixed(self.round_nonce, NONCE_SIZE)
            .fixed(self.policy_id, 32)
            .fixed(self.prev_model_hash, 32)
            .u64(self.deadline)
        )

    @classmethod
    def read(cls, r: Reader) -> "RoundHeader":
        return cls(r.u64(), r.fixed(NONCE_SIZE), r.fixed(32), r.fixed(32), r.u64())

    def to_bytes(self) -> bytes:
        return frame(MSG_ROUND_HEADER, self.write(Writer()).getvalue())

    @classmethod
    def from_bytes(cls, data: bytes) -> "RoundHeader":
        r = unframe(data, MSG_ROUND_HEADER)
        h = cls.read(r)
        r.done()
        return h

    def to_json(self) -> dict[str, Any]:
        return {
            "round_t": self.round_t,
            "round_nonce": self.round_nonce.hex(),
            "policy_id": self.policy_id.hex(),
            "prev_model_hash": self.prev_model_hash.hex(),
            "deadline": self.deadline,
        }


def anchor_payload(commitment: Commitment, weight: int, client_id: bytes) -> bytes:
    return Writer().fixed(commitment.to_bytes(), 32).u64(weight).fixed(client_id, 32).getvalue()


def submission_message(header: RoundHeader, anchor: bytes) -> bytes:
    """Bytes a client signs: the full round header followed by its anchor."""
    return header.to_bytes() + anchor


@dataclass(frozen=True)
class ClientSubmission:
    client_id: bytes
    round_t: int
    weight: int
    commitment: Commitment
    anchor: bytes
    sealed_payload: bytes
    signature: bytes

    def to_bytes(self) -> bytes:
        w = Writer().fixed(self.client_id, 32).u64(self.round_t).u64(self.weight)
        w.fixed(self.commitment.to_bytes(), 32).fixed(self.anchor, 32)
        w.var(self.sealed_payload).fixed(self.signature, 64)
        return frame(MSG_SUBMISSION, w.getvalue())

    @classmethod
    def from_bytes(cls, data: bytes) -> "ClientSubmission":
        r = unframe(data, MSG_SUBMISSION)
        s = cls(
            r.fixed(32), r.u64(), r.u64(), Commitment.from_bytes(r.fixed(32)), r.fixed(32), r.var(), r.fixed(64)
        )
        r.done()
        return s

    def to_json(self) -> dict[str, Any]:
        return {
            "client_id": self.client_id.hex(),
            "round_t": self.round_t,
            "weight": self.weight,
            "commitment": self.commitment.to_bytes().hex(),
            "anchor": self.anchor.hex(),
            "sealed_payload_bytes": len(self.sealed_payload),
            "signature": self.signature.hex(),
        }


@dataclass(frozen=True)
class Participant:
    client_id: bytes
    commitment: Commitment
    weight: int


@dataclass(frozen=True, eq=False)
class AggregationStatement:
    header: RoundHeader
    participants: tuple[Participant, ...]
    total_weight: int
    aggregate: np.ndarray  # Δ_q = Σ nᵢ·qᵢ over the integers
    aggregate_commitment: Commitment
    policy_id: bytes
    registry_digest: bytes

    def to_bytes(self) -> bytes:
        w = self.header.write(Writer())

        def put(w: Writer, p: Participant) -> None:
            w.fixed(p.client_id, 32).fixed(p.commitment.to_bytes(), 32).u64(p.weight)

        w.items(self.participants, put).u64(self.total_weight).i64_vector(self.aggregate)
        w.fixed(self.aggregate_commitment.to_bytes(), 32).fixed(self.policy_id, 32).fixed(self.registry_digest, 32)
        return frame(MSG_STATEMENT, w.getvalue())

    @classmethod
    def from_bytes(cls, data: bytes) -> "AggregationStatement":
        r = unframe(data, MSG_STATEMENT)
        header = RoundHeader.read(r)
        parts = r.items(lambda r: Participant(r.fixed(32), Commitment.from_bytes(r.fixed(32)), r.u64()))
        st = cls(
            header, tuple(parts), r.u64(), r.i64_vector(), Commitment.from_bytes(r.fixed(32)), r.fixed(32), r.fixed(32)
        )
        r.done()
        return st

    def statement_hash(self, hash_name: str = DEFAULT_HASH) -> bytes:
        return digest(self.to_bytes(), hash_name)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AggregationStatement):
            return NotImplemented
        return self.to_bytes() == other.to_bytes()

    __hash__ = None  # type: ignore[assignment]

    def to_json(self) -> dict[str, Any]:
        return {
            "header": self.header.to_json(),
            "participants": [
                {"client_id": p.client_id.hex(), "commitment": p.commitment.to_bytes().hex(), "weight": p.weight}
                for p in self.participants
            ],
            "total_weight": self.total_weight,
            "aggregate_len": int(self.aggregate.size),
            "aggregate_commitment": self.aggregate_commitment.to_bytes().hex(),
            "policy_id": self.policy_id.hex(),
            "registry_digest": self.registry_digest.hex(),
        }


BACKEND_TRANSPARENT = "transparent"
BACKEND_MOCK = "mock"
_BACKEND_CODES = {BACKEND_TRANSPARENT: 1, BACKEND_MOCK: 2}
_BACKEND_NAMES = {v: k for k, v in _BACKEND_CODES.items()}


@dataclass(frozen=True)
class AggregationProof:
    backend: str
    payload: bytes
    simulated_prove_ms: float = 0.0
    simulated_verify_ms: float = 0.0

    @property
    def size(self) -> int:
        return len(self.payload)

    def to_bytes(self) -> bytes:
        w = Writer().u8(_BACKEND_CODES[self.backend]).var(self.payload)
        w.f64(self.simulated_prove_ms).f64(self.simulated_verify_ms)
        return frame(MSG_PROOF, w.getvalue())

    @classmethod
    def from_bytes(cls, data: bytes) -> "AggregationProof":
        from ..errors import DecodeError

        r = unframe(data, MSG_PROOF)
        code = r.u8()
        if code not in _BACKEND_NAMES:
            raise DecodeError(f"unknown proof backend {code}")
        p = cls(_BACKEND_NAMES[code], r.var(), r.f64(), r.f64())
        r.done()
        return p

    def to_json(self) -> dict[str, Any]:
        return {
            "backend": self.backend,
            "payload": self.payload.hex(),
            "size": self.size,
            "simulated_prove_ms": self.simulated_prove_ms,
            "simulated_verify_ms": self.simulated_verify_ms,
        }


@dataclass(frozen=True)
class Attestation:
    enclave_measurement: bytes
    statement_hash: bytes
    model_hash: bytes
    norm_checks_passed: bool
    signature: bytes = field(default=b"\x00" * 64)

    def signed_bytes(self) -> bytes:
        return (
            Writer()
            .fixed(self.enclave_measurement, 32)
            .fixed(self.statement_hash, 32)
            .fixed(self.model_hash, 32)
            .u8(int(self.norm_checks_passed))
            .getvalue()
        )

    def to_bytes(self) -> bytes:
        return frame(MSG_ATTESTATION, Writer().raw(self.signed_bytes()).fixed(self.signature, 64).getvalue())

    @classmethod
    def from_bytes(cls, data: bytes) -> "Attestation":
        r = unframe(data, MSG_ATTESTATION)
        a = cls(r.fixed(32), r.fixed(32), r.fixed(32), bool(r.u8()), r.fixed(64))
        r.done()
        return a

    def to_json(self) -> dict[str, Any]:
        return {
            "enclave_measurement": self.enclave_measurement.hex(),
            "statement_hash": self.statement_hash.hex(),
            "model_hash": self.model_hash.hex(),
            "norm_checks_passed": self.norm_checks_passed,
            "signature": self.signature.hex(),
        }


ATTEST_DOMAIN = TAG_ATTEST
RECEIPT_DOMAIN = TAG_RECEIPT


@dataclass(frozen=True)
class EnclaveReceipt:
    """Enclave-signed outcome for one submission (accepted or rejected)."""

    round_t: int
    client_id: bytes
    anchor: bytes
    accepted: bool
    reason: str = ""
    signature: bytes = field(default=b"\x00" * 64)

    def signed_bytes(self) -> bytes:
        return (
            Writer()
            .u64(self.round_t)
            .fixed(self.client_id, 32)
            .fixed(self.anchor, 32)
            .u8(int(self.accepted))
            .text(self.reason)
            .getvalue()
        )

    def to_bytes(self) -> bytes:
        msg = MSG_INCLUSION_RECEIPT if self.accepted else MSG_REJECTION_RECEIPT
        return frame(msg, Writer().raw(self.signed_bytes()).fixed(self.signature, 64).getvalue())

    @classmethod
    def from_bytes(cls, data: bytes) -> "EnclaveReceipt":
        msg = MSG_INCLUSION_RECEIPT if len(data) > 1 and data[1] == MSG_INCLUSION_RECEIPT else MSG_REJECTION_RECEIPT
        r = unframe(data, msg)
        rc = cls(r.u64(), r.fixed(32), r.fixed(32), bool(r.u8()), r.text(), r.fixed(64))
        r.done()
        return rc

    def to_json(self) -> dict[str, Any]:
        return {
            "round_t": self.round_t,
            "client_id": self.client_id.hex(),
            "anchor": self.anchor.hex(),
            "accepted": self.accepted,
            "reason": self.reason,
            "signature": self.signature.hex(),
        }


@dataclass(frozen=True)
class EnclavePublic:
    """What the genesis config publishes about the enclave."""

    seal_public: bytes  # X25519
    attest_public: bytes  # ristretto255 Schnorr key
    measurement: bytes

    def to_bytes(self) -> bytes:
        return frame(
            MSG_ENCLAVE_PUBLIC,
            Writer().fixed(self.seal_public, 32).fixed(self.attest_public, 32).fixed(self.measurement, 32).getvalue(),
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "seal_public": self.seal_public.hex(),
            "attest_public": self.attest_public.hex(),
            "measurement": self.measurement.hex(),
        }

    @classmethod
    def from_json(cls, d: dict[str, Any]) -> "EnclavePublic":
        return cls(bytes.fromhex(d["seal_public"]), bytes.fromhex(d["attest_public"]), bytes.fromhex(d["measurement"]))


def registry_digest(registry: "dict[bytes, bytes]", hash_name: str = DEFAULT_HASH) -> bytes:
    """Digest of the identity registry in canonical (sorted client_id) order."""
    w = Writer().u32(len(registry))
    for cid in sorted(registry):
        w.fixed(cid, 32).fixed(registry[cid], 32)
    return digest(w.getvalue(), hash_name)
