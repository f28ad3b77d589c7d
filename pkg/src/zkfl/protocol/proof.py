"""Pluggable aggregation-proof backends and the public verifier.

``transparent`` reveals the aggregate blinding ``r_agg = Σ nᵢ·rᵢ`` and the
verifier checks ``commit(Δ_q, r_agg) == Σ nᵢ·Cᵢ``. Soundness rests on the
binding of the Pedersen commitments. It is not zero-knowledge in ``r_agg``.

``mock`` emits a fixed 128-byte enclave-keyed tag over the statement hash and
carries replayed prover/verifier timings. It proves integrity of transport
only and is not sound against a misbehaving enclave.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from ..crypto.group import ORDER, Scalar
from ..crypto.hashing import TAG_MOCK_PROOF, tagged_hash
from ..crypto.pedersen import PedersenParams, combine, commit_vector
from ..crypto.schnorr import sign, verify_sig
from ..encoding import encode_ints
from ..errors import EncodingError
from .messages import (
    BACKEND_MOCK,
    BACKEND_TRANSPARENT,
    AggregationProof,
    AggregationStatement,
    RoundHeader,
    registry_digest,
)

MOCK_PROOF_SIZE = 128
# Published reference timings for a DenseNet121-sized circuit, replayed and labeled as such in every output.
REFERENCE_PROVE_MS = 45_200.0
REFERENCE_VERIFY_MS = 10.0


@dataclass(frozen=True)
class VerifierContext:
    """Public inputs a verifier checks the statement against. Every field is optional."""

    expected_header: RoundHeader | None = None
    registry: Mapping[bytes, bytes] | None = None
    quorum: int | None = None
    policy_id: bytes | None = None
    enclave_attest_public: bytes | None = None


@dataclass(frozen=True)
class TransparentBackend:
    name: str = BACKEND_TRANSPARENT

    def prove(self, statement: AggregationStatement, r_agg: Scalar, **_: object) -> AggregationProof:
        return AggregationProof(self.name, r_agg.to_bytes())

    def check(self, statement: AggregationStatement, proof: AggregationProof, params: PedersenParams, ctx: VerifierContext) -> bool:
        if len(proof.payload) != 32:
            return False
        r_agg = int.from_bytes(proof.payload, "little")
        if r_agg >= ORDER:
            return False
        try:
            lhs = commit_vector(params, encode_ints(statement.aggregate), r_agg)
        except EncodingError:
            return False
        rhs = combine([p.commitment for p in statement.participants], [p.weight for p in statement.participants])
        return lhs == rhs and rhs == statement.aggregate_commitment


@dataclass(frozen=True)
class MockBackend:
    """Timings are multiplied by ``scale`` and reported, never slept."""

    prove_ms: float = REFERENCE_PROVE_MS
    verify_ms: float = REFERENCE_VERIFY_MS
    scale: float = 1.0
    name: str = field(default=BACKEND_MOCK)

    def prove(self, statement: AggregationStatement, r_agg: Scalar, *, attest_secret: Scalar, hash_name: str = "sha256", **_: object) -> AggregationProof:
        sh = statement.statement_hash(hash_name)
        sig = sign(attest_secret, sh, domain=TAG_MOCK_PROOF, hash_name=hash_name).to_bytes()
        payload = sig + sh + _mock_pad(sh, hash_name)
        return AggregationProof(self.name, payload, self.prove_ms * self.scale, self.verify_ms * self.scale)

    def check(self, statement: AggregationStatement, proof: AggregationProof, params: PedersenParams, ctx: VerifierContext) -> bool:
        if len(proof.payload) != MOCK_PROOF_SIZE or ctx.enclave_attest_public is None:
            return False
        sh = statement.statement_hash(params.hash_name)
        sig, bound, pad = proof.payload[:64], proof.payload[64:96], proof.payload[96:]
        if bound != sh or pad != _mock_pad(sh, params.hash_name):
            return False
        return verify_sig(ctx.enclave_attest_public, sh, sig, domain=TAG_MOCK_PROOF, hash_name=params.hash_name)


def _mock_pad(statement_hash: bytes, hash_name: str) -> bytes:
    return tagged_hash(TAG_MOCK_PROOF + b"/pad", statement_hash, hash_name=hash_name)


BACKENDS: dict[str, type] = {BACKEND_TRANSPARENT: TransparentBackend, BACKEND_MOCK: MockBackend}


def make_backend(name: str, **kwargs: object) -> TransparentBackend | MockBackend:
    if name not in BACKENDS:
        raise ValueError(f"unknown proof backend {name!r}")
    return BACKENDS[name](**kwargs)


def statement_well_formed(statement: AggregationStatement, params: PedersenParams, ctx: VerifierContext) -> bool:
    """Round, policy and participant-set predicates shared by both backends."""
    parts = statement.participants
    if not parts or statement.aggregate.shape != (params.dimension,):
        return False
    ids = [p.client_id for p in parts]
    # Strictly increasing ids: canonical order and uniqueness in one check.
    if any(a >= b for a, b in zip(ids, ids[1:])):
        return False
    if any(p.weight <= 0 for p in parts) or statement.total_weight != sum(p.weight for p in parts):
        return False
    if statement.policy_id != statement.header.policy_id:
        return False
    if ctx.expected_header is not None and statement.header != ctx.expected_header:
        return False
    if ctx.policy_id is not None and statement.policy_id != ctx.policy_id:
        return False
    if ctx.quorum is not None and len(parts) < ctx.quorum:
        return False
    if ctx.registry is not None:
        if statement.registry_digest != registry_digest(dict(ctx.registry), params.hash_name):
            return False
        if any(cid not in ctx.registry for cid in ids):
            return False
    return True


def verify_aggregation(
    statement: AggregationStatement,
    proof: AggregationProof,
    params: PedersenParams,
    context: VerifierContext | None = None,
) -> bool:
    """Total verifier: returns ``False`` on any malformed or inconsistent input."""
    ctx = context or VerifierContext()
    try:
        if not statement_well_formed(statement, params, ctx):
            return False
        backend = BACKENDS.get(proof.backend)
        if backend is None:
            return False
        return backend().check(statement, proof, params, ctx)
    except (ValueError, TypeError, OverflowError):
        return False
