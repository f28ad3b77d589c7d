"""Client role: quantize, commit, seal to the enclave, sign, verify distribution."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from ..crypto.group import RandomSource, Scalar
from ..crypto.hashing import DEFAULT_HASH, TAG_COMMIT_ANCHOR, digest, hash_commit
from ..crypto.pedersen import PedersenParams, commit_vector
from ..crypto.schnorr import KeyPair, keygen, sign
from ..encoding import FixedPointConfig, QuantizedUpdate, encode_ints, quantize
from ..errors import ProtocolError
from ..fl import ModelParams
from ..serialization import Writer
from .messages import ClientSubmission, RoundHeader, anchor_payload, submission_message
from .sealing import seal


@dataclass
class ClientIdentity:
    keypair: KeyPair
    registered: bool = False
    hash_name: str = DEFAULT_HASH

    @classmethod
    def from_seed(cls, seed: bytes, hash_name: str = DEFAULT_HASH) -> "ClientIdentity":
        return cls(keygen(seed, hash_name), hash_name=hash_name)

    @property
    def public_key(self) -> bytes:
        return self.keypair.public.to_bytes()

    @property
    def client_id(self) -> bytes:
        return client_id_of(self.public_key, self.hash_name)


def client_id_of(public_key: bytes, hash_name: str = DEFAULT_HASH) -> bytes:
    return digest(public_key, hash_name)


@dataclass(frozen=True)
class Opening:
    """Client-local secret behind a commitment; leaves the client only sealed."""

    update: QuantizedUpdate
    blinding: Scalar


def compute_anchor(
    header: RoundHeader, commitment, weight: int, client_id: bytes, hash_name: str = DEFAULT_HASH
) -> bytes:
    """On-chain anchor binding (commitment, weight, client) to one round header."""
    return hash_commit(
        anchor_payload(commitment, weight, client_id), header.to_bytes(), TAG_COMMIT_ANCHOR, hash_name
    )


def seal_aad(client_id: bytes, round_t: int) -> bytes:
    return Writer().fixed(client_id, 32).u64(round_t).getvalue()


def client_prepare_submission(
    identity: ClientIdentity,
    update: np.ndarray,
    header: RoundHeader,
    enclave_pubkey: bytes,
    cfg: FixedPointConfig,
    *,
    params: PedersenParams,
    weight: int,
    rng: RandomSource,
    latest_round: int | None = None,
    quantized: QuantizedUpdate | None = None,
) -> tuple[ClientSubmission, Opening]:
    """Build a signed, sealed submission for ``header``'s round.

    ``quantized`` bypasses quantization (used to submit hand-built integer
    vectors, e.g. boundary probes of the norm policy).
    """
    if not identity.registered:
        raise ProtocolError("not-registered", "identity is not registered on the ledger")
    if latest_round is not None and header.round_t < latest_round:
        raise ProtocolError("stale-round", f"header round {header.round_t} < latest {latest_round}")
    hn = identity.hash_name
    qu = quantized if quantized is not None else quantize(update, cfg, header.round_t)
    r = Scalar.random(rng)
    commitment = commit_vector(params, encode_ints(qu.values), r)
    cid = identity.client_id
    anchor = compute_anchor(header, commitment, weight, cid, hn)
    sealed = seal(enclave_pubkey, qu.to_bytes() + r.to_bytes(), seal_aad(cid, header.round_t), rng)
    sig = sign(identity.keypair.secret, submission_message(header, anchor), hash_name=hn)
    sub = ClientSubmission(cid, header.round_t, weight, commitment, anchor, sealed, sig.to_bytes())
    return sub, Opening(qu, r)


class LedgerView(Protocol):
    def get_model_hash(self, round_t: int) -> bytes: ...


def client_verify_distribution(
    header: RoundHeader, model: ModelParams, ledger: LedgerView, hash_name: str = DEFAULT_HASH
) -> bool:
    """True iff the received model hashes to what round ``header.round_t`` finalized.

    Raises ``ProtocolError('round-not-finalized')`` if the ledger has no record.
    """
    try:
        recorded = ledger.get_model_hash(header.round_t)
    except Exception as exc:  # ledger reports unknown-round
        raise ProtocolError("round-not-finalized", str(exc)) from exc
    return model.model_hash(hash_name) == recorded
