"""Ledger transactions. Each has one canonical framed encoding."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Union

from ..crypto.hashing import DEFAULT_HASH, digest
from ..errors import DecodeError
from ..protocol.messages import AggregationProof, AggregationStatement, Attestation, EnclaveReceipt
from ..serialization import PROTOCOL_VERSION, Reader, Writer, frame, unframe

TX_GENESIS = 20
TX_REGISTER = 21
TX_POST_COMMITMENT = 22
TX_REJECTION_RECEIPT = 23
TX_FINALIZE = 24


@dataclass(frozen=True)
class GenesisTx:
    genesis_digest: bytes

    def to_bytes(self) -> bytes:
        return frame(TX_GENESIS, Writer().fixed(self.genesis_digest, 32).getvalue())

    @classmethod
    def read(cls, r: Reader) -> "GenesisTx":
        return cls(r.fixed(32))


@dataclass(frozen=True)
class RegisterIdentity:
    public_key: bytes
    metadata: str
    registrar_signature: bytes

    def signed_bytes(self) -> bytes:
        return Writer().fixed(self.public_key, 32).text(self.metadata).getvalue()

    def to_bytes(self) -> bytes:
        return frame(TX_REGISTER, Writer().raw(self.signed_bytes()).fixed(self.registrar_signature, 64).getvalue())

    @classmethod
    def read(cls, r: Reader) -> "RegisterIdentity":
        return cls(r.fixed(32), r.text(), r.fixed(64))


@dataclass(frozen=True)
class PostCommitment:
    client_id: bytes
    round_t: int
    anchor: bytes
    signature: bytes  # client signature over (open round header ‖ anchor)

    def to_bytes(self) -> bytes:
        w = Writer().fixed(self.client_id, 32).u64(self.round_t).fixed(self.anchor, 32).fixed(self.signature, 64)
        return frame(TX_POST_COMMITMENT, w.getvalue())

    @classmethod
    def read(cls, r: Reader) -> "PostCommitment":
        return cls(r.fixed(32), r.u64(), r.fixed(32), r.fixed(64))


@dataclass(frozen=True)
class RejectionReceiptTx:
    receipt: EnclaveReceipt

    def to_bytes(self) -> bytes:
        return frame(TX_REJECTION_RECEIPT, Writer().var(self.receipt.to_bytes()).getvalue())

    @classmethod
    def read(cls, r: Reader) -> "RejectionReceiptTx":
        return cls(EnclaveReceipt.from_bytes(r.var()))


@dataclass(frozen=True)
class FinalizeRound:
    statement: AggregationStatement
    proof: AggregationProof
    attestation: Attestation
    model_hash: bytes

    def to_bytes(self) -> bytes:
        w = Writer().var(self.statement.to_bytes()).var(self.proof.to_bytes())
        w.var(self.attestation.to_bytes()).fixed(self.model_hash, 32)
        return frame(TX_FINALIZE, w.getvalue())

    @classmethod
    def read(cls, r: Reader) -> "FinalizeRound":
        return cls(
            AggregationStatement.from_bytes(r.var()),
            AggregationProof.from_bytes(r.var()),
            Attestation.from_bytes(r.var()),
            r.fixed(32),
        )


Tx = Union[GenesisTx, RegisterIdentity, PostCommitment, RejectionReceiptTx, FinalizeRound]

_READERS = {
    TX_GENESIS: GenesisTx,
    TX_REGISTER: RegisterIdentity,
    TX_POST_COMMITMENT: PostCommitment,
    TX_REJECTION_RECEIPT: RejectionReceiptTx,
    TX_FINALIZE: FinalizeRound,
}


def decode_tx(data: bytes) -> Tx:
    if len(data) < 2 or data[0] != PROTOCOL_VERSION or data[1] not in _READERS:
        raise DecodeError("unknown transaction frame")
    cls = _READERS[data[1]]
    r = unframe(data, data[1])
    tx = cls.read(r)
    r.done()
    if tx.to_bytes() != bytes(data):
        raise DecodeError("non-canonical transaction encoding")
    return tx


def tx_hash(data: bytes, hash_name: str = DEFAULT_HASH) -> bytes:
    return digest(data, hash_name)


def tx_kind(tx: Tx) -> str:
    return {
        GenesisTx: "genesis",
        RegisterIdentity: "register",
        PostCommitment: "post-commitment",
        RejectionReceiptTx: "rejection-receipt",
        FinalizeRound: "finalize",
    }[type(tx)]


def tx_json(tx: Tx) -> dict[str, Any]:
    out: dict[str, Any] = {"kind": tx_kind(tx)}
    if isinstance(tx, PostCommitment):
        out.update(client_id=tx.client_id.hex(), round_t=tx.round_t, anchor=tx.anchor.hex())
    elif isinstance(tx, RegisterIdentity):
        out.update(public_key=tx.public_key.hex(), metadata=tx.metadata)
    elif isinstance(tx, RejectionReceiptTx):
        out.update(tx.receipt.to_json())
    elif isinstance(tx, FinalizeRound):
        out.update(statement=tx.statement.to_json(), proof=tx.proof.to_json(), model_hash=tx.model_hash.hex())
    elif isinstance(tx, GenesisTx):
        out.update(genesis_digest=tx.genesis_digest.hex())
    return out
