"""Optional numba acceleration.

Set ``STACKPPC_DISABLE_NUMBA=1`` to run every kernel as plain numpy code.
The kernels are written so that the same source is valid under both paths.
"""
import os

_FLAG = os.environ.get("STACKPPC_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

NUMBA_ENABLED = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def jit(fn):
    """Compile ``fn`` with ``numba.njit`` unless acceleration is disabled."""
    if not NUMBA_ENABLED:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


def python_version(fn):
    """Return the uncompiled Python function behind a kernel."""
    return getattr(fn, "py_func", fn)
