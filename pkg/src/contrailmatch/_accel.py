"""Numba availability and the env flag that selects the kernel backend.

Set ``CONTRAILMATCH_NUMBA=0`` to force the pure-numpy kernels. The flag is
read once at import time; numba kernels are still compiled on demand when
numba is installed so the two paths can be compared side by side.
"""

from __future__ import annotations

import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

_FLAG = os.environ.get("CONTRAILMATCH_NUMBA", "1").strip().lower()

USE_NUMBA = HAVE_NUMBA and _FLAG not in {"0", "false", "no", "off"}


def njit(fn):
    """``numba.njit(cache=True)`` when numba is importable, else identity."""
    if HAVE_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
