"""Backend selection for the hot numeric kernels.

Kernels are compiled with numba's ``@njit`` when numba is importable; every
kernel also has a pure-numpy implementation.  The active backend is chosen
once at import time from the ``MFGLAB_BACKEND`` environment variable
("numba" or "numpy") and can be switched at runtime with :func:`set_backend`
(used by the benchmark script and backend-equivalence tests).
"""

import os

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

_VALID = ("numba", "numpy")


def _initial_backend():
    choice = os.environ.get("MFGLAB_BACKEND", "").strip().lower()
    if choice and choice not in _VALID:
        raise ValueError(f"MFGLAB_BACKEND must be one of {_VALID}, got {choice!r}")
    if choice == "numba" and not HAS_NUMBA:
        raise ImportError("MFGLAB_BACKEND=numba but numba is not importable")
    if not choice:
        choice = "numba" if HAS_NUMBA else "numpy"
    return choice


_ACTIVE = _initial_backend()


def active_backend() -> str:
    return _ACTIVE


def set_backend(name: str) -> str:
    """Switch the kernel backend; returns the previous backend name."""
    global _ACTIVE
    if name not in _VALID:
        raise ValueError(f"backend must be one of {_VALID}, got {name!r}")
    if name == "numba" and not HAS_NUMBA:
        raise ImportError("numba backend requested but numba is not importable")
    previous = _ACTIVE
    _ACTIVE = name
    return previous


def jit(func):
    """Return an njit-compiled twin of ``func`` (or ``func`` itself without numba)."""
    if HAS_NUMBA:
        return numba.njit(func, cache=True)
    return func


def dispatch(numpy_impl, numba_impl=None):
    """Build a callable that routes to the active backend's implementation.

    ``numba_impl`` defaults to an njit-compiled copy of ``numpy_impl`` (the
    single-body case); pass a separate loop-style implementation where the
    two backends genuinely differ.
    """
    compiled = jit(numba_impl if numba_impl is not None else numpy_impl)

    def call(*args):
        if _ACTIVE == "numba" and HAS_NUMBA:
            return compiled(*args)
        return numpy_impl(*args)

    call.implementations = {"numpy": numpy_impl, "numba": compiled}
    return call
