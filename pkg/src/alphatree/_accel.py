"""Numba switch.

Hot kernels are decorated with :func:`njit` from this module. When numba is
missing, or ``ALPHATREE_DISABLE_NUMBA`` is set to a non-empty value other than
``0``, the decorator is a no-op and callers fall back to the pure-numpy paths.
The flag is read once at import time.
"""
import os

_flag = os.environ.get("ALPHATREE_DISABLE_NUMBA", "")
DISABLED_BY_ENV = _flag not in ("", "0")

try:
    if DISABLED_BY_ENV:
        raise ImportError("numba disabled by ALPHATREE_DISABLE_NUMBA")
    import numba as _numba

    HAS_NUMBA = True
except ImportError:
    _numba = None
    HAS_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit(cache=True, nogil=True)`` or identity when numba is off."""
    if HAS_NUMBA:
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


def backend() -> str:
    return "numba" if HAS_NUMBA else "numpy"
