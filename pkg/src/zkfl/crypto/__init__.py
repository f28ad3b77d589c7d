"""Cryptographic substrate: ristretto255 group, Pedersen vector commitments,
hash commitments and Schnorr signatures."""

from ._backend import BACKEND
from .group import ORDER, GroupElement, RandomSource, Scalar, SystemRandom, multi_scalar_mul
from .hashing import DEFAULT_HASH, digest, hash_commit, tagged_hash
from .pedersen import Commitment, PedersenParams, combine, commit_vector, setup_params, verify_opening
from .schnorr import KeyPair, Signature, keygen, sign, verify_sig

__all__ = [
    "BACKEND",
    "Commitment",
    "DEFAULT_HASH",
    "GroupElement",
    "KeyPair",
    "ORDER",
    "PedersenParams",
    "RandomSource",
    "Scalar",
    "Signature",
    "SystemRandom",
    "combine",
    "commit_vector",
    "digest",
    "hash_commit",
    "keygen",
    "multi_scalar_mul",
    "setup_params",
    "sign",
    "tagged_hash",
    "verify_opening",
    "verify_sig",
]
