"""Numba switch.

Set ``QSATSIM_DISABLE_NUMBA=1`` to force the pure-numpy kernels, e.g. for
debugging or on platforms without a working numba.
"""
import os

_flag = os.environ.get("QSATSIM_DISABLE_NUMBA", "").strip().lower()
DISABLED = _flag not in ("", "0", "false", "no")

try:
    if DISABLED:
        raise ImportError
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False
    _njit = None


def njit(fn=None, **kwargs):
    """``numba.njit`` with caching and nogil, or the identity when disabled."""
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)

    def wrap(f):
        if HAVE_NUMBA:
            return _njit(**kwargs)(f)
        return f

    return wrap(fn) if fn is not None else wrap


def backend():
    return "numba" if HAVE_NUMBA else "numpy"
