"""Optional numba acceleration.

Set ``TREEGROUPS_NO_NUMBA=1`` to force the pure-numpy/Python fallback path.
"""

import os

_DISABLED = os.environ.get("TREEGROUPS_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    _njit = None
    HAVE_NUMBA = False


def jit(func):
    """Compile ``func`` with numba when enabled, else return it unchanged."""
    if HAVE_NUMBA:
        return _njit(cache=True, nogil=True)(func)
    return func


def backend():
    return "numba" if HAVE_NUMBA else "numpy"


def pick(numba_impl, numpy_impl):
    """Compiled ``numba_impl`` when numba is on, otherwise the numpy version."""
    return jit(numba_impl) if HAVE_NUMBA else numpy_impl
