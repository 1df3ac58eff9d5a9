"""Peeling-kernel backend selection: compiled extension if built, else Python."""

from . import _peel_py

try:
    from . import _peel

    DEFAULT_BACKEND = "cython"
except ImportError:  # extension not built on this platform
    _peel = None
    DEFAULT_BACKEND = "python"


def available_backends():
    backends = ["python"]
    if _peel is not None:
        backends.insert(0, "cython")
    return backends


def get_kernel(backend=None):
    """Return the peel_kernel callable for `backend` (default: best available)."""
    if backend is None:
        backend = DEFAULT_BACKEND
    if backend == "cython":
        if _peel is None:
            raise RuntimeError("compiled peeling kernel is not available")
        return _peel.peel_kernel
    if backend == "python":
        return _peel_py.peel_kernel
    raise ValueError(f"unknown peeling backend: {backend!r}")
