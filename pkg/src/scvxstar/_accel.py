"""Optional numba acceleration.

Set ``SCVXSTAR_NUMBA=0`` before import to force the pure-numpy paths.
"""
import os

_flag = os.environ.get("SCVXSTAR_NUMBA", "1").strip().lower()

try:
    if _flag in ("0", "false", "no", "off"):
        raise ImportError("numba disabled by SCVXSTAR_NUMBA")
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:
    _njit = None
    HAVE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, otherwise returns the function unchanged."""
    if HAVE_NUMBA:
        return _njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f
