"""Authenticated encryption of client payloads to the enclave's X25519 key.

ECIES-style: a fresh ephemeral X25519 key per payload, HKDF-SHA256 to a
ChaCha20-Poly1305 key. The ephemeral key makes a fixed nonce safe.
"""

from __future__ import annotations

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey, X25519PublicKey
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305
from cryptography.hazmat.primitives.kdf.hkdf import HKDF
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from ..crypto.group import RandomSource

_INFO = b"zkfl/seal/v1"
_NONCE = bytes(12)


class SealError(Exception):
    pass


def _key(shared: bytes, eph_pub: bytes, recipient: bytes) -> bytes:
    return HKDF(algorithm=hashes.SHA256(), length=32, salt=eph_pub + recipient, info=_INFO).derive(shared)


def public_bytes(key: X25519PrivateKey) -> bytes:
    return key.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)


def seal_keypair(rng: RandomSource) -> X25519PrivateKey:
    return X25519PrivateKey.from_private_bytes(rng.bytes(32))


def seal(recipient_public: bytes, plaintext: bytes, aad: bytes, rng: RandomSource) -> bytes:
    eph = X25519PrivateKey.from_private_bytes(rng.bytes(32))
    eph_pub = public_bytes(eph)
    shared = eph.exchange(X25519PublicKey.from_public_bytes(recipient_public))
    return eph_pub + ChaCha20Poly1305(_key(shared, eph_pub, recipient_public)).encrypt(_NONCE, plaintext, aad)


def unseal(recipient: X25519PrivateKey, blob: bytes, aad: bytes) -> bytes:
    if len(blob) < 32 + 16:
        raise SealError("sealed payload too short")
    eph_pub, ct = blob[:32], blob[32:]
    try:
        shared = recipient.exchange(X25519PublicKey.from_public_bytes(eph_pub))
        return ChaCha20Poly1305(_key(shared, eph_pub, public_bytes(recipient))).decrypt(_NONCE, ct, aad)
    except (InvalidTag, ValueError) as exc:
        raise SealError("payload authentication failed") from exc
