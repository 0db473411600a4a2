"""Counter-based random streams shared by both simulation backends.

Every replica owns an independent splitmix64 stream.  The stream state for
replica ``r`` of a run with base seed ``s`` is::

    state_0 = mix64(uint64(s) ^ (GOLDEN * uint64(r + 1)))

and each draw advances ``state += GOLDEN`` and returns ``mix64(state)``.
Both the numba and the numpy backend consume the same per-replica draw
sequence, so trajectories are bit-identical across backends and replicas
can be generated independently and in any order.
"""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U11 = np.uint64(11)
_U27 = np.uint64(27)
_U30 = np.uint64(30)
_U31 = np.uint64(31)
_INV53 = float(2.0**-53)

# Mean above which Poisson sampling switches from sequential inversion to
# the PTRS transformed-rejection method.
POISSON_PTRS_CUTOFF = 10.0


def mix64(z):
    """splitmix64 finalizer; accepts uint64 scalars or arrays."""
    z = np.uint64(z) if np.isscalar(z) else np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _U30)) * _MIX1
        z = (z ^ (z >> _U27)) * _MIX2
    return z ^ (z >> _U31)


def replica_state(base_seed, replica):
    """Initial stream state for one replica; vectorized over ``replica``."""
    base = np.uint64(base_seed & 0xFFFFFFFFFFFFFFFF)
    r = np.asarray(replica, dtype=np.uint64)
    return mix64(base ^ (GOLDEN * (r + np.uint64(1))))


def next_u64(state):
    """Advance stream state(s): returns (new_state, draw)."""
    with np.errstate(over="ignore"):
        state = state + GOLDEN
    return state, mix64(state)


def u64_to_unit(z):
    """Map uint64 draw(s) to float64 in (0, 1]."""
    return ((z >> _U11) + np.uint64(1)).astype(np.float64) * _INV53 if not np.isscalar(z) else float((int(z) >> 11) + 1) * _INV53


def poisson_one(lam, state):
    """Scalar Poisson sample from a stream; returns (value, new_state).

    Exact sampler: sequential inversion below POISSON_PTRS_CUTOFF, Hormann's
    PTRS transformed rejection above it.  Reference implementation for tests;
    the kernels carry their own copies of the same draw protocol.
    """
    import math

    state = np.uint64(state)
    if lam < POISSON_PTRS_CUTOFF:
        state, z = next_u64(state)
        u = u64_to_unit(z)
        x = 0
        p = math.exp(-lam)
        s = p
        while u > s:
            x += 1
            p *= lam / x
            s += p
        return x, state
    slam = math.sqrt(lam)
    loglam = math.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        state, z1 = next_u64(state)
        state, z2 = next_u64(state)
        u = u64_to_unit(z1) - 0.5
        v = u64_to_unit(z2)
        us = 0.5 - abs(u)
        k = math.floor((2.0 * a / us + b) * u + lam + 0.43)
        if us >= 0.07 and v <= vr:
            return int(k), state
        if k < 0 or (us < 0.013 and v > us):
            continue
        if (math.log(v) + math.log(invalpha) - math.log(a / (us * us) + b)
                <= k * loglam - lam - math.lgamma(k + 1.0)):
            return int(k), state


def uniform_below_one(state, bound):
    """Scalar uniform integer in [0, bound) by bitmask rejection; returns (value, new_state)."""
    mask = np.uint64((1 << int(bound - 1).bit_length()) - 1)
    state = np.uint64(state)
    while True:
        state, z = next_u64(state)
        cand = int(z & mask)
        if cand < bound:
            return cand, state
