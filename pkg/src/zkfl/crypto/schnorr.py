"""Schnorr signatures over ristretto255 with Fiat–Shamir challenges.

Nonces are derived deterministically from the secret and the message, so
signing is reproducible without an RNG.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import CryptoError, DecodeError
from .group import GroupElement, Scalar
from .hashing import DEFAULT_HASH, TAG_SIG

SIGNATURE_SIZE = 64


@dataclass(frozen=True)
class KeyPair:
    secret: Scalar
    public: GroupElement


@dataclass(frozen=True, slots=True)
class Signature:
    challenge: Scalar
    response: Scalar

    def to_bytes(self) -> bytes:
        return self.challenge.to_bytes() + self.response.to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "Signature":
        if len(data) != SIGNATURE_SIZE:
            raise DecodeError("signature must be 64 bytes")
        return cls(Scalar.from_bytes(data[:32]), Scalar.from_bytes(data[32:]))


def keygen(seed: bytes, hash_name: str = DEFAULT_HASH) -> KeyPair:
    secret = Scalar.from_hash(b"zkfl/keygen", bytes(seed), hash_name)
    if secret.value == 0:  # pragma: no cover - probability 2^-252
        raise CryptoError("bad-seed", "derived zero secret")
    return KeyPair(secret, GroupElement.base_mul(secret))


def _challenge(
    domain: bytes, nonce_point: GroupElement, public: GroupElement, message: bytes, hash_name: str
) -> Scalar:
    return Scalar.from_hash(domain, nonce_point.data + public.data + message, hash_name)


def sign(
    secret: Scalar, message: bytes, domain: bytes = TAG_SIG, hash_name: str = DEFAULT_HASH
) -> Signature:
    public = GroupElement.base_mul(secret)
    k = Scalar.from_hash(domain + b"/nonce", secret.to_bytes() + message, hash_name)
    if k.value == 0:  # pragma: no cover
        k = Scalar(1)
    nonce_point = GroupElement.base_mul(k)
    e = _challenge(domain, nonce_point, public, message, hash_name)
    return Signature(e, k + e * secret)


def verify_sig(
    public: GroupElement | bytes,
    message: bytes,
    sig: Signature | bytes,
    domain: bytes = TAG_SIG,
    hash_name: str = DEFAULT_HASH,
) -> bool:
    """Total: malformed keys or signature bytes yield ``False``."""
    try:
        if not isinstance(public, GroupElement):
            public = GroupElement.from_bytes(public)
        if not isinstance(sig, Signature):
            sig = Signature.from_bytes(sig)
    except (DecodeError, ValueError, TypeError):
        return False
    if public.is_identity():
        return False
    nonce_point = GroupElement.base_mul(sig.response) - public * sig.challenge
    return _challenge(domain, nonce_point, public, message, hash_name) == sig.challenge
