"""Canonical little-endian binary encoding shared by every wire type.

Fixed-width integers are little-endian; variable-length fields and vectors
carry a 4-byte little-endian count. Readers raise :class:`DecodeError` on any
truncation or trailing garbage, never ``IndexError``/``struct.error``.
"""

from __future__ import annotations

import struct
from typing import Callable, Iterable, TypeVar

import numpy as np

from .errors import DecodeError

T = TypeVar("T")

PROTOCOL_VERSION = 1


class Writer:
    def __init__(self) -> None:
        self._parts: list[bytes] = []

    def u8(self, v: int) -> "Writer":
        self._parts.append(struct.pack("<B", v))
        return self

    def u32(self, v: int) -> "Writer":
        self._parts.append(struct.pack("<I", v))
        return self

    def u64(self, v: int) -> "Writer":
        self._parts.append(struct.pack("<Q", v))
        return self

    def f64(self, v: float) -> "Writer":
        self._parts.append(struct.pack("<d", v))
        return self

    def fixed(self, b: bytes, size: int) -> "Writer":
        if len(b) != size:
            raise ValueError(f"expected {size} bytes, got {len(b)}")
        self._parts.append(bytes(b))
        return self

    def var(self, b: bytes) -> "Writer":
        self.u32(len(b))
        self._parts.append(bytes(b))
        return self

    def text(self, s: str) -> "Writer":
        return self.var(s.encode("utf-8"))

    def i64_vector(self, values: np.ndarray | Iterable[int]) -> "Writer":
        arr = np.ascontiguousarray(values, dtype="<i8")
        self.u32(arr.size)
        self._parts.append(arr.tobytes())
        return self

    def f64_vector(self, values: np.ndarray | Iterable[float]) -> "Writer":
        arr = np.ascontiguousarray(values, dtype="<f8")
        self.u32(arr.size)
        self._parts.append(arr.tobytes())
        return self

    def items(self, seq: Iterable[T], write: Callable[["Writer", T], object]) -> "Writer":
        seq = list(seq)
        self.u32(len(seq))
        for item in seq:
            write(self, item)
        return self

    def raw(self, b: bytes) -> "Writer":
        self._parts.append(bytes(b))
        return self

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    def __init__(self, data: bytes) -> None:
        self._buf = memoryview(bytes(data))
        self._pos = 0

    def _take(self, n: int) -> bytes:
        if n < 0 or self._pos + n > len(self._buf):
            raise DecodeError(f"truncated: need {n} bytes at offset {self._pos}")
        out = self._buf[self._pos : self._pos + n].tobytes()
        self._pos += n
        return out

    def u8(self) -> int:
        return self._take(1)[0]

    def u32(self) -> int:
        return struct.unpack("<I", self._take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self._take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self._take(8))[0]

    def fixed(self, size: int) -> bytes:
        return self._take(size)

    def var(self) -> bytes:
        return self._take(self.u32())

    def text(self) -> str:
        try:
            return self.var().decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError("invalid utf-8") from exc

    def i64_vector(self) -> np.ndarray:
        n = self.u32()
        return np.frombuffer(self._take(8 * n), dtype="<i8").astype(np.int64)

    def f64_vector(self) -> np.ndarray:
        n = self.u32()
        return np.frombuffer(self._take(8 * n), dtype="<f8").astype(np.float64)

    def items(self, read: Callable[["Reader"], T]) -> list[T]:
        n = self.u32()
        if n > len(self._buf):
            raise DecodeError("item count exceeds buffer")
        return [read(self) for _ in range(n)]

    @property
    def remaining(self) -> int:
        return len(self._buf) - self._pos

    def done(self) -> None:
        if self.remaining:
            raise DecodeError(f"{self.remaining} trailing bytes")


def frame(msg_type: int, body: bytes) -> bytes:
    """Prefix a message body with protocol version and message type."""
    return bytes([PROTOCOL_VERSION, msg_type]) + body


def unframe(data: bytes, msg_type: int) -> Reader:
    if len(data) < 2:
        raise DecodeError("frame too short")
    if data[0] != PROTOCOL_VERSION:
        raise DecodeError(f"unsupported protocol version {data[0]}")
    if data[1] != msg_type:
        raise DecodeError(f"expected message type {msg_type}, got {data[1]}")
    return Reader(data[2:])
