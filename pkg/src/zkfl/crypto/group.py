"""Scalars mod the ristretto255 group order and group elements.

Scalar arithmetic stays in Python integers; point arithmetic goes through the
selected kernel (compiled or pure Python) on canonical 32-byte encodings.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence, Union

from ..errors import CryptoError, DecodeError
from ._backend import kernel
from .hashing import DEFAULT_HASH, expand64

ORDER = 2**252 + 27742317777372353535851937790883648493
SCALAR_SIZE = 32
POINT_SIZE = 32


class RandomSource(Protocol):
    """Anything with ``bytes(n)``: ``numpy.random.Generator``, ``random.Random.randbytes``-style wrappers."""

    def bytes(self, n: int) -> bytes: ...


class SystemRandom:
    def bytes(self, n: int) -> bytes:
        import secrets

        return secrets.token_bytes(n)


@dataclass(frozen=True, slots=True)
class Scalar:
    value: int

    def __post_init__(self) -> None:
        if not 0 <= self.value < ORDER:
            object.__setattr__(self, "value", self.value % ORDER)

    @classmethod
    def from_int(cls, v: int) -> "Scalar":
        """Signed integers map to ``v mod q`` (negatives become ``q - |v|``)."""
        return cls(v % ORDER)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Scalar":
        if len(data) != SCALAR_SIZE:
            raise DecodeError("scalar must be 32 bytes")
        v = int.from_bytes(data, "little")
        if v >= ORDER:
            raise DecodeError("non-canonical scalar")
        return cls(v)

    @classmethod
    def random(cls, rng: RandomSource) -> "Scalar":
        return cls(int.from_bytes(rng.bytes(64), "little") % ORDER)

    @classmethod
    def from_hash(cls, tag: bytes, data: bytes, hash_name: str = DEFAULT_HASH) -> "Scalar":
        return cls(int.from_bytes(expand64(tag, data, hash_name), "little") % ORDER)

    def to_bytes(self) -> bytes:
        return self.value.to_bytes(SCALAR_SIZE, "little")

    def to_signed(self) -> int:
        return self.value - ORDER if self.value > ORDER // 2 else self.value

    def inverse(self) -> "Scalar":
        if self.value == 0:
            raise CryptoError("zero-inverse", "zero has no inverse")
        return Scalar(pow(self.value, -1, ORDER))

    def __add__(self, other: "Scalar | int") -> "Scalar":
        return Scalar((self.value + _int(other)) % ORDER)

    __radd__ = __add__

    def __sub__(self, other: "Scalar | int") -> "Scalar":
        return Scalar((self.value - _int(other)) % ORDER)

    def __rsub__(self, other: "Scalar | int") -> "Scalar":
        return Scalar((_int(other) - self.value) % ORDER)

    def __mul__(self, other: "Scalar | int") -> "Scalar":
        return Scalar(self.value * _int(other) % ORDER)

    __rmul__ = __mul__

    def __neg__(self) -> "Scalar":
        return Scalar(-self.value % ORDER)

    def __int__(self) -> int:
        return self.value


def _int(x: "Scalar | int") -> int:
    return x.value if isinstance(x, Scalar) else int(x)


ScalarLike = Union[Scalar, int]


def scalar_bytes(values: Iterable[ScalarLike]) -> bytes:
    """Concatenated canonical encodings; ints are reduced mod q (signed-safe)."""
    return b"".join((_int(v) % ORDER).to_bytes(SCALAR_SIZE, "little") for v in values)


@dataclass(frozen=True, slots=True)
class GroupElement:
    """A ristretto255 element held in its canonical compressed encoding."""

    data: bytes

    @classmethod
    def from_bytes(cls, data: bytes) -> "GroupElement":
        data = bytes(data)
        if len(data) != POINT_SIZE or not kernel.is_valid(data):
            raise DecodeError("invalid group element encoding")
        return cls(data)

    @classmethod
    def identity(cls) -> "GroupElement":
        return cls(bytes(kernel.IDENTITY))

    @classmethod
    def generator(cls) -> "GroupElement":
        return cls(bytes(kernel.BASEPOINT))

    @classmethod
    def hash_to_group(cls, tag: bytes, data: bytes, hash_name: str = DEFAULT_HASH) -> "GroupElement":
        return cls(bytes(kernel.from_uniform(expand64(tag, data, hash_name))))

    @classmethod
    def base_mul(cls, k: ScalarLike) -> "GroupElement":
        return cls(bytes(kernel.mul_base(scalar_bytes([k]))))

    def to_bytes(self) -> bytes:
        return self.data

    def is_identity(self) -> bool:
        return self.data == kernel.IDENTITY

    def __add__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(bytes(kernel.add(self.data, other.data)))

    def __sub__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(bytes(kernel.sub(self.data, other.data)))

    def __neg__(self) -> "GroupElement":
        return GroupElement(bytes(kernel.neg(self.data)))

    def __mul__(self, k: ScalarLike) -> "GroupElement":
        return GroupElement(bytes(kernel.mul(self.data, scalar_bytes([k]))))

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"GroupElement({self.data.hex()[:16]}…)"


def multi_scalar_mul(scalars: Sequence[ScalarLike], points: Sequence[GroupElement]) -> GroupElement:
    if len(scalars) != len(points):
        raise CryptoError("dimension-mismatch", "msm: scalar/point count mismatch")
    if not points:
        return GroupElement.identity()
    return GroupElement(
        bytes(kernel.msm(scalar_bytes(scalars), b"".join(p.data for p in points)))
    )
