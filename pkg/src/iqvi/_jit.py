"""JIT switch.

Kernels are compiled with numba unless ``IQVI_DISABLE_NUMBA`` is set to a
truthy value or numba cannot be imported; in that case the pure-numpy
implementations in :mod:`iqvi.kernels` are used instead.
"""
import os

_FLAG = os.environ.get("IQVI_DISABLE_NUMBA", "").strip().lower()

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(func):
    """Compile ``func`` in nopython mode when numba is available."""
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True)(func)
