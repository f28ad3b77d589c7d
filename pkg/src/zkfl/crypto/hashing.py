"""Domain-separated hashing over one configurable 256-bit hash."""

from __future__ import annotations

import hashlib
import struct

from ..errors import CryptoError

DEFAULT_HASH = "sha256"
SUPPORTED_HASHES = ("sha256", "sha3_256", "blake2s")
DIGEST_SIZE = 32

TAG_SIG = b"zkfl/sig"
TAG_COMMIT_ANCHOR = b"zkfl/commit-anchor"
TAG_ATTEST = b"zkfl/attest"
TAG_BLOCK = b"zkfl/block"
TAG_RECEIPT = b"zkfl/receipt"
TAG_MOCK_PROOF = b"zkfl/mock-proof"
TAG_REGISTRAR = b"zkfl/registrar"


def _new(hash_name: str):
    if hash_name not in SUPPORTED_HASHES:
        raise CryptoError("unsupported-hash", hash_name)
    return hashlib.new(hash_name)


def digest(data: bytes, hash_name: str = DEFAULT_HASH) -> bytes:
    h = _new(hash_name)
    h.update(data)
    return h.digest()


def tagged_hash(tag: bytes, *parts: bytes, hash_name: str = DEFAULT_HASH) -> bytes:
    """Hash of ``len(tag) ‖ tag ‖ (len(part) ‖ part)*``; unambiguous for any split."""
    h = _new(hash_name)
    h.update(struct.pack("<I", len(tag)))
    h.update(tag)
    for part in parts:
        h.update(struct.pack("<Q", len(part)))
        h.update(part)
    return h.digest()


def expand64(tag: bytes, data: bytes, hash_name: str = DEFAULT_HASH) -> bytes:
    """64 uniform bytes from two counter-separated invocations of the hash."""
    return tagged_hash(tag, data, b"\x00", hash_name=hash_name) + tagged_hash(
        tag, data, b"\x01", hash_name=hash_name
    )


def hash_commit(
    payload: bytes, nonce: bytes, domain_tag: bytes, hash_name: str = DEFAULT_HASH
) -> bytes:
    """``H(domain_tag ‖ len(payload) ‖ payload ‖ nonce)`` with an 8-byte length."""
    if not domain_tag:
        raise CryptoError("missing-domain-tag", "hash_commit requires a domain tag")
    h = _new(hash_name)
    h.update(domain_tag)
    h.update(struct.pack("<Q", len(payload)))
    h.update(payload)
    h.update(nonce)
    return h.digest()
