"""Pure-Python ristretto255 (RFC 9496) over edwards25519.

Used when the compiled ``zkfl._core`` extension is unavailable. Exposes the
same byte-level API as the extension; outputs are byte-identical.
Not constant time.
"""

from __future__ import annotations

P = 2**255 - 19
D = (-121665 * pow(121666, -1, P)) % P
SQRT_M1 = pow(2, (P - 1) // 4, P)


def _is_negative(x: int) -> bool:
    return x & 1 == 1


def _abs(x: int) -> int:
    return (P - x) % P if _is_negative(x) else x


def _sqrt_ratio_m1(u: int, v: int) -> tuple[bool, int]:
    v3 = v * v % P * v % P
    v7 = v3 * v3 % P * v % P
    r = u * v3 % P * pow(u * v7 % P, (P - 5) // 8, P) % P
    check = v * r % P * r % P
    correct = check == u % P
    flipped = check == (-u) % P
    flipped_i = check == (-u) * SQRT_M1 % P
    if flipped or flipped_i:
        r = r * SQRT_M1 % P
    return correct or flipped, _abs(r)


INVSQRT_A_MINUS_D = _sqrt_ratio_m1(1, (-1 - D) % P)[1]
# RFC 9496 fixes the odd root here, not the one _sqrt_ratio_m1 returns.
SQRT_AD_MINUS_ONE = P - _sqrt_ratio_m1((-D - 1) % P, 1)[1]
ONE_MINUS_D_SQ = (1 - D * D) % P
D_MINUS_ONE_SQ = (D - 1) * (D - 1) % P
D2 = 2 * D % P

# Extended twisted Edwards coordinates (X, Y, Z, T), x = X/Z, y = Y/Z, xy = T/Z.
Point = tuple[int, int, int, int]
IDENTITY_POINT: Point = (0, 1, 1, 0)


def _edwards_basepoint() -> Point:
    y = 4 * pow(5, -1, P) % P
    x2 = (y * y - 1) * pow(D * y * y + 1, -1, P) % P
    x = pow(x2, (P + 3) // 8, P)
    if (x * x - x2) % P:
        x = x * SQRT_M1 % P
    if _is_negative(x):
        x = P - x
    return (x, y, 1, x * y % P)


BASE_POINT = _edwards_basepoint()


def point_add(p1: Point, p2: Point) -> Point:
    x1, y1, z1, t1 = p1
    x2, y2, z2, t2 = p2
    a = (y1 - x1) * (y2 - x2) % P
    b = (y1 + x1) * (y2 + x2) % P
    c = t1 * D2 % P * t2 % P
    d = 2 * z1 * z2 % P
    e, f, g, h = b - a, d - c, d + c, b + a
    return (e * f % P, g * h % P, f * g % P, e * h % P)


def point_double(p1: Point) -> Point:
    x1, y1, z1, _ = p1
    a = x1 * x1 % P
    b = y1 * y1 % P
    c = 2 * z1 * z1 % P
    h = a + b
    e = (h - (x1 + y1) * (x1 + y1)) % P
    g = a - b
    f = c + g
    return (e * f % P, g * h % P, f * g % P, e * h % P)


def point_neg(p1: Point) -> Point:
    x, y, z, t = p1
    return ((P - x) % P, y, z, (P - t) % P)


def scalar_mul(p1: Point, k: int) -> Point:
    acc = IDENTITY_POINT
    for bit in bin(k)[2:] if k else "":
        acc = point_double(acc)
        if bit == "1":
            acc = point_add(acc, p1)
    return acc


def decode(data: bytes) -> Point:
    if len(data) != 32:
        raise ValueError("point encoding must be 32 bytes")
    s = int.from_bytes(data, "little")
    if s >= P or _is_negative(s):
        raise ValueError("invalid ristretto255 encoding")
    ss = s * s % P
    u1 = (1 - ss) % P
    u2 = (1 + ss) % P
    u2_sqr = u2 * u2 % P
    v = (-(D * u1 % P * u1) - u2_sqr) % P
    was_square, invsqrt = _sqrt_ratio_m1(1, v * u2_sqr % P)
    den_x = invsqrt * u2 % P
    den_y = invsqrt * den_x % P * v % P
    x = _abs(2 * s * den_x % P)
    y = u1 * den_y % P
    t = x * y % P
    if not was_square or _is_negative(t) or y == 0:
        raise ValueError("invalid ristretto255 encoding")
    return (x, y, 1, t)


def encode(p1: Point) -> bytes:
    x0, y0, z0, t0 = p1
    u1 = (z0 + y0) * (z0 - y0) % P
    u2 = x0 * y0 % P
    _, invsqrt = _sqrt_ratio_m1(1, u1 * u2 % P * u2 % P)
    den1 = invsqrt * u1 % P
    den2 = invsqrt * u2 % P
    z_inv = den1 * den2 % P * t0 % P
    if _is_negative(t0 * z_inv % P):
        x, y = y0 * SQRT_M1 % P, x0 * SQRT_M1 % P
        den_inv = den1 * INVSQRT_A_MINUS_D % P
    else:
        x, y = x0, y0
        den_inv = den2
    if _is_negative(x * z_inv % P):
        y = (P - y) % P
    s = _abs(den_inv * (z0 - y) % P)
    return s.to_bytes(32, "little")


def _elligator(t: int) -> Point:
    r = SQRT_M1 * t % P * t % P
    u = (r + 1) * ONE_MINUS_D_SQ % P
    v = (-1 - r * D) * (r + D) % P
    was_square, s = _sqrt_ratio_m1(u, v)
    s_prime = (P - _abs(s * t % P)) % P
    if not was_square:
        s = s_prime
    c = P - 1 if was_square else r
    n = (c * (r - 1) % P * D_MINUS_ONE_SQ - v) % P
    w0 = 2 * s * v % P
    w1 = n * SQRT_AD_MINUS_ONE % P
    w2 = (1 - s * s) % P
    w3 = (1 + s * s) % P
    return (w0 * w3 % P, w2 * w1 % P, w1 * w3 % P, w0 * w2 % P)


def _field_from_bytes(b: bytes) -> int:
    return (int.from_bytes(b, "little") & ((1 << 255) - 1)) % P


# Byte-level API mirrored by zkfl._core.

BACKEND = "python"
L = 2**252 + 27742317777372353535851937790883648493
BASEPOINT = encode(BASE_POINT)
IDENTITY = bytes(32)


def _scalar(data: bytes) -> int:
    if len(data) != 32:
        raise ValueError("scalar encoding must be 32 bytes")
    k = int.from_bytes(data, "little")
    if k >= L:
        raise ValueError("non-canonical scalar")
    return k


def from_uniform(data: bytes) -> bytes:
    if len(data) != 64:
        raise ValueError("hash-to-group input must be 64 bytes")
    p1 = _elligator(_field_from_bytes(data[:32]))
    p2 = _elligator(_field_from_bytes(data[32:]))
    return encode(point_add(p1, p2))


def is_valid(data: bytes) -> bool:
    try:
        decode(data)
    except ValueError:
        return False
    return True


def add(a: bytes, b: bytes) -> bytes:
    return encode(point_add(decode(a), decode(b)))


def sub(a: bytes, b: bytes) -> bytes:
    return encode(point_add(decode(a), point_neg(decode(b))))


def neg(a: bytes) -> bytes:
    return encode(point_neg(decode(a)))


def mul(point: bytes, scalar: bytes) -> bytes:
    return encode(_signed_mul(decode(point), _scalar(scalar)))


def mul_base(scalar: bytes) -> bytes:
    return encode(_signed_mul(BASE_POINT, _scalar(scalar)))


def _signed_mul(p1: Point, k: int) -> Point:
    # Negative quantized values arrive as L - |x|; multiply by |x| and negate.
    if k > L // 2:
        return point_neg(scalar_mul(p1, L - k))
    return scalar_mul(p1, k)


def _msm_points(scalars: bytes, points: list[Point]) -> bytes:
    if len(scalars) % 32:
        raise ValueError("scalar buffer length not a multiple of 32")
    acc = IDENTITY_POINT
    for i in range(len(scalars) // 32):
        k = _scalar(scalars[32 * i : 32 * i + 32])
        if k:
            acc = point_add(acc, _signed_mul(points[i], k))
    return encode(acc)


def _decode_all(buf: bytes) -> list[Point]:
    if len(buf) % 32:
        raise ValueError("point buffer length not a multiple of 32")
    return [decode(buf[i : i + 32]) for i in range(0, len(buf), 32)]


def msm(scalars: bytes, points: bytes) -> bytes:
    pts = _decode_all(points)
    if len(scalars) // 32 != len(pts) or len(scalars) % 32:
        raise ValueError("msm: scalar/point count mismatch")
    return _msm_points(scalars, pts)


class PointTable:
    """Decoded generator table matching ``zkfl._core.PointTable``."""

    def __init__(self, points: bytes) -> None:
        self._points = _decode_all(points)

    def __len__(self) -> int:
        return len(self._points)

    def msm(self, scalars: bytes) -> bytes:
        if len(scalars) // 32 > len(self._points):
            raise ValueError("msm: more scalars than table points")
        return _msm_points(scalars, self._points)
