"""Fixed-point quantization of real-valued updates into group scalars.

Values are scaled by ``S = 2**fractional_bits``, rounded half-to-even and
clamped to ``±floor(M·S)``. Negative integers map to ``q - |x|``. The config
checks up front that any weighted aggregate of ``max_clients`` updates with
weights up to ``max_weight`` stays far from the field's wrap-around point and
inside a signed 64-bit integer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .crypto.group import ORDER, Scalar
from .crypto.hashing import DEFAULT_HASH, digest
from .errors import EncodingError, ShapeError
from .serialization import Reader, Writer

INT64_MAX = 2**63 - 1


@dataclass(frozen=True)
class FixedPointConfig:
    dimension: int
    fractional_bits: int = 16
    clamp_magnitude: float = 8.0
    max_clients: int = 64
    max_weight: int = 1_000_000

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise EncodingError("invalid-dimension", "dimension must be >= 1")
        if not 0 <= self.fractional_bits <= 48:
            raise EncodingError("invalid-config", "fractional_bits must be in [0, 48]")
        if not (self.clamp_magnitude > 0 and math.isfinite(self.clamp_magnitude)):
            raise EncodingError("invalid-config", "clamp_magnitude must be positive")
        if self.max_clients < 1 or self.max_weight < 1:
            raise EncodingError("invalid-config", "max_clients and max_weight must be >= 1")
        if self.aggregate_bound >= ORDER // 2:
            raise EncodingError("overflow-risk", "aggregate bound reaches q/2")
        if self.aggregate_bound > INT64_MAX:
            raise EncodingError("overflow-risk", "aggregate bound exceeds int64")

    @property
    def scale(self) -> int:
        return 1 << self.fractional_bits

    @property
    def clamp_int(self) -> int:
        return math.floor(self.clamp_magnitude * self.scale)

    @property
    def aggregate_bound(self) -> int:
        return self.max_clients * self.max_weight * self.clamp_int

    def to_bytes(self) -> bytes:
        return (
            Writer()
            .u32(self.dimension)
            .u32(self.fractional_bits)
            .f64(self.clamp_magnitude)
            .u32(self.max_clients)
            .u64(self.max_weight)
            .getvalue()
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "FixedPointConfig":
        r = Reader(data)
        cfg = cls(r.u32(), r.u32(), r.f64(), r.u32(), r.u64())
        r.done()
        return cfg

    def config_id(self, hash_name: str = DEFAULT_HASH) -> bytes:
        return digest(self.to_bytes(), hash_name)


@dataclass(frozen=True, eq=False)
class QuantizedUpdate:
    values: np.ndarray
    config_id: bytes
    round_t: int = 0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QuantizedUpdate):
            return NotImplemented
        return (
            self.config_id == other.config_id
            and self.round_t == other.round_t
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None  # type: ignore[assignment]

    def to_bytes(self) -> bytes:
        return Writer().i64_vector(self.values).fixed(self.config_id, 32).u64(self.round_t).getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "QuantizedUpdate":
        r = Reader(data)
        qu = cls(r.i64_vector(), r.fixed(32), r.u64())
        r.done()
        return qu


def quantize(update: Sequence[float] | np.ndarray, cfg: FixedPointConfig, round_t: int = 0) -> QuantizedUpdate:
    x = np.asarray(update, dtype=np.float64)
    if x.shape != (cfg.dimension,):
        raise ShapeError(f"expected shape ({cfg.dimension},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise EncodingError("non-finite-value", "update contains NaN or infinity")
    lim = cfg.clamp_int
    q = np.clip(np.rint(x * cfg.scale), -lim, lim).astype(np.int64)
    return QuantizedUpdate(q, cfg.config_id(), round_t)


def dequantize(qu: QuantizedUpdate, cfg: FixedPointConfig) -> np.ndarray:
    if qu.config_id != cfg.config_id():
        raise EncodingError("config-mismatch", "update was quantized under another config")
    return qu.values.astype(np.float64) / cfg.scale


def encode_ints(values: Iterable[int], bound: int | None = None) -> list[int]:
    """Field encoding of signed integers as plain ints in ``[0, q)``."""
    limit = ORDER // 2 if bound is None else bound
    out = []
    for v in values:
        v = int(v)
        if abs(v) > limit or abs(v) >= ORDER // 2:
            raise EncodingError("overflow-risk", f"|{v}| exceeds representable bound")
        out.append(v % ORDER)
    return out


def encode_to_scalars(qu: QuantizedUpdate | Sequence[int] | np.ndarray) -> list[Scalar]:
    values = qu.values if isinstance(qu, QuantizedUpdate) else qu
    return [Scalar(v) for v in encode_ints(values)]


def decode_from_scalars(scalars: Sequence[Scalar | int], cfg: FixedPointConfig) -> list[int]:
    half = ORDER // 2
    out = []
    for s in scalars:
        v = s.value if isinstance(s, Scalar) else int(s) % ORDER
        x = v - ORDER if v > half else v
        if abs(x) > cfg.aggregate_bound:
            raise EncodingError("overflow-risk", "decoded value outside aggregate-safety bound")
        out.append(x)
    return out


def l2_norm_squared(qu: QuantizedUpdate | Sequence[int] | np.ndarray) -> int:
    values = qu.values if isinstance(qu, QuantizedUpdate) else qu
    return sum(v * v for v in np.asarray(values, dtype=np.int64).tolist())
