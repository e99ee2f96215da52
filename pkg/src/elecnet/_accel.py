"""Backend selection for the hot kernels.

Kernels exist twice: a loop form compiled with numba and a vectorised numpy
form.  Numba is used when importable unless ``ELECNET_DISABLE_NUMBA`` is set
to a truthy value.  :func:`use_backend` switches at runtime (tests, benchmark).
"""
from __future__ import annotations

import os
from contextlib import contextmanager

ENV_FLAG = "ELECNET_DISABLE_NUMBA"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

_state = {
    "backend": "numba"
    if HAVE_NUMBA and os.environ.get(ENV_FLAG, "").strip().lower() not in {"1", "true", "yes", "on"}
    else "numpy"
}


def njit(func):
    """``numba.njit(cache=True)`` when numba is importable, identity otherwise."""
    if HAVE_NUMBA:
        return numba.njit(cache=True)(func)
    return func


def backend() -> str:
    return _state["backend"]


def set_backend(name: str) -> None:
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _state["backend"] = name


@contextmanager
def use_backend(name: str):
    old = backend()
    set_backend(name)
    try:
        yield
    finally:
        set_backend(old)
