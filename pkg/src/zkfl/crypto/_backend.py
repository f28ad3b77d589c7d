"""Select the group kernel: compiled ``zkfl._core`` if importable, else pure Python.

Set ``ZKFL_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

if os.environ.get("ZKFL_PURE_PYTHON", "") not in ("", "0"):
    from . import _ristretto as kernel
else:
    try:
        from .. import _core as kernel  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on build
        from . import _ristretto as kernel

BACKEND: str = kernel.BACKEND

__all__ = ["kernel", "BACKEND"]
