"""numba @njit simulation kernels.

Semantics contract shared with _kernels_numpy (same per-replica draw order,
see rng.py): per recording interval draw a Poisson event count at total rate
(#bonds)/2, then that many uniformly chosen bonds; each chosen bond swaps its
endpoint occupations (no-op when equal), signed bond currents count particle
crossings, and the tagged particle rides real swaps that touch its site.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_ONE = np.uint64(1)
_U11 = np.uint64(11)
_U27 = np.uint64(27)
_U30 = np.uint64(30)
_U31 = np.uint64(31)
_INV53 = 2.0**-53
_PTRS_CUTOFF = 10.0

INIT_STAR = 0
INIT_STATIONARY = 1
INIT_FIXED_COUNT_STAR = 2


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> _U30)) * _MIX1
    z = (z ^ (z >> _U27)) * _MIX2
    return z ^ (z >> _U31)


@njit(cache=True, inline="always")
def _replica_state(base_seed, replica):
    return _mix64(base_seed ^ (GOLDEN * (replica + _ONE)))


@njit(cache=True, inline="always")
def _next_unit(state):
    """Advance stream; return (state, float in (0,1])."""
    state = state + GOLDEN
    z = _mix64(state)
    return state, ((z >> _U11) + _ONE) * _INV53


@njit(cache=True, inline="always")
def _next_below(state, bound, mask):
    """Advance stream; return (state, uniform int64 in [0, bound))."""
    while True:
        state = state + GOLDEN
        cand = np.int64(_mix64(state) & mask)
        if cand < bound:
            return state, cand


@njit(cache=True)
def _poisson(lam, state):
    """Exact Poisson sample; returns (count, state).  Mirrors rng.poisson_one."""
    if lam < _PTRS_CUTOFF:
        state, u = _next_unit(state)
        x = np.int64(0)
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
        state, u1 = _next_unit(state)
        state, v = _next_unit(state)
        u = u1 - 0.5
        us = 0.5 - abs(u)
        k = math.floor((2.0 * a / us + b) * u + lam + 0.43)
        if us >= 0.07 and v <= vr:
            return np.int64(k), state
        if k < 0 or (us < 0.013 and v > us):
            continue
        if (math.log(v) + math.log(invalpha) - math.log(a / (us * us) + b)
                <= k * loglam - lam - math.lgamma(k + 1.0)):
            return np.int64(k), state


@njit(cache=True, inline="always")
def _bond_mask(bound):
    """Smallest all-ones mask covering [0, bound)."""
    m = np.uint64(1)
    while np.int64(m) < bound - 1:
        m = (m << _ONE) | _ONE
    return m


@njit(cache=True)
def _init_config(occ, init_mode, rho, kcount, state):
    """Fill occupancy in place, return (tagged_site, state)."""
    two_l = occ.size
    if init_mode == INIT_STAR:
        occ[0] = 1
        for x in range(1, two_l):
            state, u = _next_unit(state)
            occ[x] = 1 if u < rho else 0
        return np.int64(0), state
    if init_mode == INIT_FIXED_COUNT_STAR:
        for x in range(two_l):
            occ[x] = 0
        occ[0] = 1
        # partial Fisher-Yates over sites 1..two_l-1 picks kcount-1 extras
        perm = np.empty(two_l - 1, np.int64)
        for i in range(two_l - 1):
            perm[i] = i + 1
        mask = _bond_mask(two_l - 1)
        for i in range(kcount - 1):
            state, j = _next_below(state, two_l - 1 - i, mask)
            j = j + i
            tmp = perm[i]
            perm[i] = perm[j]
            perm[j] = tmp
            occ[perm[i]] = 1
        return np.int64(0), state
    # INIT_STATIONARY: plain product measure, retried until non-empty,
    # then tag the particle at a uniformly chosen occupied site.
    mask = _bond_mask(two_l)
    while True:
        total = 0
        for x in range(two_l):
            state, u = _next_unit(state)
            occ[x] = 1 if u < rho else 0
            total += occ[x]
        if total > 0:
            break
    while True:
        state, site = _next_below(state, two_l, mask)
        if occ[site] == 1:
            return site, state


@njit(cache=True)
def simulate_single(occ0, tagged0, seed, times, window_w, want_snapshots):
    """One trajectory from an explicit configuration.

    Returns (x_disp, j_origin, window_currents, snapshots): series over the
    recording grid.  j_origin is the signed crossing count of bond (-1, 0)
    (array index two_l-1 to 0); window_currents[g, x] is J_{x,x+1} for
    x in [0, window_w).
    """
    two_l = occ0.size
    rate = 0.5 * two_l
    n_rec = times.size
    occ = occ0.copy()
    tagged = np.int64(tagged0)
    disp = np.int64(0)
    # full ring of bond currents: unconditional update keeps the loop branch-light
    jfull = np.zeros(two_l, np.int64)
    x_out = np.empty(n_rec, np.int64)
    j_out = np.empty(n_rec, np.int64)
    jwin_out = np.zeros((n_rec, window_w), np.int64)
    n_snap = n_rec if want_snapshots else 0
    snaps = np.zeros((n_snap, two_l), np.uint8)
    mask = _bond_mask(two_l)
    state = _replica_state(np.uint64(seed), np.uint64(0))
    t_prev = 0.0
    for g in range(n_rec):
        n_events, state = _poisson(rate * (times[g] - t_prev), state)
        for _ in range(n_events):
            while True:
                state = state + GOLDEN
                b = np.int64(_mix64(state) & mask)
                if b < two_l:
                    break
            x = b
            y = b + 1
            if y == two_l:
                y = 0
            ox = occ[x]
            oy = occ[y]
            occ[x] = oy
            occ[y] = ox
            jfull[b] += np.int64(ox) - np.int64(oy)
            if tagged == x or tagged == y:
                if ox != oy:
                    if tagged == x:
                        tagged = y
                        disp += 1
                    else:
                        tagged = x
                        disp -= 1
        x_out[g] = disp
        j_out[g] = jfull[two_l - 1]
        for w in range(window_w):
            jwin_out[g, w] = jfull[w]
        if want_snapshots:
            for s_ in range(two_l):
                snaps[g, s_] = occ[s_]
        t_prev = times[g]
    return x_out, j_out, jwin_out, snaps


@njit(cache=True, parallel=True)
def simulate_ensemble(two_l, rho, kcount, init_mode, n_rep, rep_offset,
                      base_seed, times, want_final_occ):
    """Independent replicas; returns (X, J_rel, J_fix, final_occ).

    X[r, g]: tagged displacement of replica r at times[g].
    J_rel:   current through the bond immediately left of the replica's
             initial tagged site (equals J_fix for origin-tagged inits).
    J_fix:   current through the fixed bond (-1, 0).
    """
    n_rec = times.size
    x_out = np.empty((n_rep, n_rec), np.int64)
    jrel_out = np.empty((n_rep, n_rec), np.int64)
    jfix_out = np.empty((n_rep, n_rec), np.int64)
    n_occ = n_rep if want_final_occ else 0
    occ_out = np.zeros((n_occ, two_l), np.uint8)
    rate = 0.5 * two_l
    mask = _bond_mask(two_l)
    fixed_bond = np.int64(two_l - 1)
    for r in prange(n_rep):
        state = _replica_state(np.uint64(base_seed), np.uint64(rep_offset + r))
        occ = np.empty(two_l, np.uint8)
        jfull = np.zeros(two_l, np.int64)
        tagged, state = _init_config(occ, init_mode, rho, kcount, state)
        rel_bond = tagged - 1 if tagged > 0 else np.int64(two_l - 1)
        disp = np.int64(0)
        t_prev = 0.0
        for g in range(n_rec):
            n_events, state = _poisson(rate * (times[g] - t_prev), state)
            for _ in range(n_events):
                while True:
                    state = state + GOLDEN
                    b = np.int64(_mix64(state) & mask)
                    if b < two_l:
                        break
                x = b
                y = b + 1
                if y == two_l:
                    y = 0
                ox = occ[x]
                oy = occ[y]
                occ[x] = oy
                occ[y] = ox
                jfull[b] += np.int64(ox) - np.int64(oy)
                if tagged == x or tagged == y:
                    if ox != oy:
                        if tagged == x:
                            tagged = y
                            disp += 1
                        else:
                            tagged = x
                            disp -= 1
            x_out[r, g] = disp
            jrel_out[r, g] = jfull[rel_bond]
            jfix_out[r, g] = jfull[fixed_bond]
            t_prev = times[g]
        if want_final_occ:
            for s_ in range(two_l):
                occ_out[r, s_] = occ[s_]
    return x_out, jrel_out, jfix_out, occ_out
