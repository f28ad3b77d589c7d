"""Compare the compiled group kernel against the pure-Python fallback.

Both kernels expose the same byte-level API, so each operation is timed on
identical inputs and the outputs are checked for equality.

    python3 benchmarks/bench_backends.py [--dims 16 64 256] [--repeats 3]
"""

from __future__ import annotations

import argparse
import statistics
import sys
import time

import numpy as np

from zkfl.crypto import _ristretto as pure

try:
    from zkfl import _core as native
except ImportError:
    native = None


def _scalars(rng: np.random.Generator, n: int) -> bytes:
    # 252-bit values keep every scalar canonical.
    return b"".join(rng.bytes(31) + b"\x00" for _ in range(n))


def _time(fn, repeats: int) -> tuple[float, bytes]:
    times, out = [], b""
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append((time.perf_counter() - t0) * 1000.0)
    return statistics.median(times), out


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", type=int, nargs="+", default=[16, 64, 256])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if native is None:
        print("compiled kernel not built; only the fallback is available", file=sys.stderr)
        return 1

    rng = np.random.default_rng(args.seed)
    print(f"{'op':<12}{'n':>7}{'native_ms':>12}{'python_ms':>12}{'speedup':>10}")
    s = _scalars(rng, 1)
    cases = [("mul_base", 1, lambda k: k.mul_base(s))]
    for d in args.dims:
        pts = b"".join(pure.from_uniform(rng.bytes(64)) for _ in range(d))
        sc = _scalars(rng, d)
        cases.append(("msm", d, lambda k, sc=sc, pts=pts: k.msm(sc, pts)))
        tables = {id(native): native.PointTable(pts), id(pure): pure.PointTable(pts)}
        cases.append(("table_msm", d, lambda k, sc=sc, t=tables: t[id(k)].msm(sc)))

    for name, n, fn in cases:
        n_ms, n_out = _time(lambda: fn(native), args.repeats)
        p_ms, p_out = _time(lambda: fn(pure), args.repeats)
        if n_out != p_out:
            print(f"output mismatch in {name} n={n}", file=sys.stderr)
            return 2
        print(f"{name:<12}{n:>7}{n_ms:>12.3f}{p_ms:>12.3f}{p_ms / max(n_ms, 1e-9):>9.0f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
