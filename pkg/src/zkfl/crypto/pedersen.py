"""Pedersen vector commitments ``r·h + Σ vᵢ·gᵢ`` with hash-derived generators."""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Any, Sequence

from ..errors import CryptoError
from ..serialization import Reader, Writer
from ._backend import kernel
from .group import GroupElement, Scalar, ScalarLike, scalar_bytes
from .hashing import DEFAULT_HASH

TAG_GENERATOR = b"zkfl/pedersen/g"
TAG_BLINDING = b"zkfl/pedersen/h"


@dataclass(frozen=True)
class PedersenParams:
    dimension: int
    generators: tuple[GroupElement, ...]
    blinding: GroupElement
    seed: bytes
    hash_name: str = DEFAULT_HASH
    _table: Any = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.generators) != self.dimension:
            raise CryptoError("invalid-dimension", "generator count != dimension")
        # h sits at index d so a (d+1)-scalar MSM covers v and r together.
        buf = b"".join(g.data for g in self.generators) + self.blinding.data
        object.__setattr__(self, "_table", kernel.PointTable(buf))

    def to_bytes(self) -> bytes:
        w = Writer().u32(self.dimension).var(self.seed).text(self.hash_name)
        w.items(self.generators, lambda w, g: w.fixed(g.data, 32))
        return w.fixed(self.blinding.data, 32).getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "PedersenParams":
        r = Reader(data)
        dim, seed, hash_name = r.u32(), r.var(), r.text()
        gens = r.items(lambda r: GroupElement.from_bytes(r.fixed(32)))
        h = GroupElement.from_bytes(r.fixed(32))
        r.done()
        return cls(dim, tuple(gens), h, seed, hash_name)


@functools.lru_cache(maxsize=16)
def setup_params(dimension: int, seed: bytes, hash_name: str = DEFAULT_HASH) -> PedersenParams:
    """Derive generators deterministically from ``seed`` via hash-to-group."""
    if dimension < 1:
        raise CryptoError("invalid-dimension", f"dimension must be >= 1, got {dimension}")
    seed = bytes(seed)
    gens = tuple(
        GroupElement.hash_to_group(TAG_GENERATOR, seed + i.to_bytes(4, "little"), hash_name)
        for i in range(dimension)
    )
    h = GroupElement.hash_to_group(TAG_BLINDING, seed, hash_name)
    seen = {g.data for g in gens} | {h.data}
    if len(seen) != dimension + 1 or GroupElement.identity().data in seen:
        raise CryptoError("degenerate-generators", "generator collision")
    return PedersenParams(dimension, gens, h, seed, hash_name)


@dataclass(frozen=True, slots=True)
class Commitment:
    point: GroupElement

    def __add__(self, other: "Commitment") -> "Commitment":
        return Commitment(self.point + other.point)

    def __mul__(self, k: ScalarLike) -> "Commitment":
        return Commitment(self.point * k)

    __rmul__ = __mul__

    def to_bytes(self) -> bytes:
        return self.point.data

    @classmethod
    def from_bytes(cls, data: bytes) -> "Commitment":
        return cls(GroupElement.from_bytes(data))


def commit_vector(params: PedersenParams, v: Sequence[ScalarLike], r: ScalarLike) -> Commitment:
    if len(v) != params.dimension:
        raise CryptoError(
            "dimension-mismatch", f"vector length {len(v)} != dimension {params.dimension}"
        )
    buf = scalar_bytes(v) + scalar_bytes([r])
    return Commitment(GroupElement(bytes(params._table.msm(buf))))


def verify_opening(
    params: PedersenParams, c: Commitment, v: Sequence[ScalarLike], r: ScalarLike
) -> bool:
    if len(v) != params.dimension:
        return False
    return commit_vector(params, v, r) == c


def combine(commitments: Sequence[Commitment], weights: Sequence[ScalarLike]) -> Commitment:
    """``Σ wᵢ·Cᵢ`` in one multi-scalar multiplication."""
    if len(commitments) != len(weights):
        raise CryptoError("dimension-mismatch", "commitment/weight count mismatch")
    if not commitments:
        return Commitment(GroupElement.identity())
    pts = b"".join(c.point.data for c in commitments)
    return Commitment(GroupElement(bytes(kernel.msm(scalar_bytes(weights), pts))))


__all__ = [
    "Commitment",
    "PedersenParams",
    "Scalar",
    "combine",
    "commit_vector",
    "setup_params",
    "verify_opening",
]
