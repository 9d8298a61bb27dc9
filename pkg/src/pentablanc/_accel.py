"""Optional numba acceleration.

Setting ``PENTABLANC_NO_NUMBA=1`` selects the pure-numpy kernels even when
numba is importable.  Compiled kernels are still built on demand so the
benchmark can compare both backends in one process.
"""
import os

DISABLED = os.environ.get("PENTABLANC_NO_NUMBA", "").strip() not in ("", "0")

try:
    import numba as _numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    _numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not DISABLED


def jit(fn):
    """numba-compiled version of ``fn``, or None when numba is missing."""
    if not HAVE_NUMBA:
        return None
    return _numba.njit(cache=True, nogil=True)(fn)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def resolve(backend_name=None) -> str:
    if backend_name in (None, "auto"):
        return backend()
    if backend_name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    if backend_name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend_name!r}")
    return backend_name
