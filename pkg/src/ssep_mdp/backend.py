"""Simulation backend selection.

The hot kernels exist twice: a numba @njit implementation and a pure-numpy
lockstep implementation.  ``SSEP_MDP_BACKEND`` picks one:

    auto   (default) numba when importable, else numpy
    numba  require numba, error if unavailable
    numpy  force the pure-numpy path

Both paths consume identical per-replica random streams (see rng.py), so
for a given seed they produce bit-identical trajectories.
"""

from __future__ import annotations

import os

from .errors import ParameterError

_VALID = ("auto", "numba", "numpy")


def requested_backend() -> str:
    name = os.environ.get("SSEP_MDP_BACKEND", "auto").strip().lower()
    if name not in _VALID:
        raise ParameterError(
            f"SSEP_MDP_BACKEND must be one of {_VALID}, got {name!r}")
    return name


def _numba_available() -> bool:
    try:
        import numba  # noqa: F401
        return True
    except ImportError:
        return False


def active_backend() -> str:
    """Resolve the backend actually used for kernel dispatch."""
    name = requested_backend()
    if name == "auto":
        return "numba" if _numba_available() else "numpy"
    if name == "numba" and not _numba_available():
        raise ParameterError("SSEP_MDP_BACKEND=numba but numba is not importable")
    return name


def get_kernels(backend: str | None = None):
    """Return the kernel module for ``backend`` (default: active backend)."""
    name = backend or active_backend()
    if name == "numba":
        from . import _kernels_numba as mod
    elif name == "numpy":
        from . import _kernels_numpy as mod
    else:
        raise ParameterError(f"unknown backend {name!r}")
    return mod


def thread_count(cli_value: int | None = None) -> int:
    """Worker thread count: CLI flag wins, then SSEP_MDP_THREADS, then 1 cpu share."""
    if cli_value is not None:
        if cli_value < 1:
            raise ParameterError("thread count must be >= 1")
        return cli_value
    env = os.environ.get("SSEP_MDP_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ParameterError(f"SSEP_MDP_THREADS must be an integer, got {env!r}") from exc
        if n < 1:
            raise ParameterError("SSEP_MDP_THREADS must be >= 1")
        return n
    return max(1, os.cpu_count() or 1)


def apply_threads(n: int) -> None:
    """Configure numba's thread pool when it is in use; numpy path is single-threaded."""
    if active_backend() == "numba":
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
