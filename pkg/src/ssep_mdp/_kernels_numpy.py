"""Pure-numpy simulation kernels (lockstep across replicas).

Fallback path for environments without numba, selected by
SSEP_MDP_BACKEND=numpy.  Replicas advance one event per vectorized round;
each replica consumes its own splitmix64 stream in exactly the same order
as the numba kernels, so outputs are bit-identical across backends.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

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


def _mix64(z):
    z = (z ^ (z >> _U30)) * _MIX1
    z = (z ^ (z >> _U27)) * _MIX2
    return z ^ (z >> _U31)


def _next_u64(states, idx):
    states[idx] += GOLDEN
    return _mix64(states[idx])


def _next_unit(states, idx):
    z = _next_u64(states, idx)
    return ((z >> _U11) + _ONE).astype(np.float64) * _INV53


def _bond_mask(bound):
    return np.uint64((1 << int(bound - 1).bit_length()) - 1)


def _draw_below(states, idx, bound, mask):
    """Uniform int64 in [0, bound) per replica in idx, bitmask rejection."""
    out = np.empty(idx.size, np.int64)
    pend = np.arange(idx.size)
    while pend.size:
        cand = (_next_u64(states, idx[pend]) & mask).astype(np.int64)
        ok = cand < bound
        out[pend[ok]] = cand[ok]
        pend = pend[~ok]
    return out


def _poisson(lam, states, idx):
    """Poisson(lam) per replica in idx; same draw protocol as the numba path."""
    n = idx.size
    if lam < _PTRS_CUTOFF:
        u = _next_unit(states, idx)
        k = np.zeros(n, np.int64)
        p = np.full(n, math.exp(-lam))
        cum = p.copy()
        active = u > cum
        while active.any():
            k[active] += 1
            p[active] *= lam / k[active]
            cum[active] += p[active]
            active = u > cum
        return k
    slam = math.sqrt(lam)
    loglam = math.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    out = np.empty(n, np.int64)
    pend = np.arange(n)
    while pend.size:
        u = _next_unit(states, idx[pend]) - 0.5
        v = _next_unit(states, idx[pend])
        us = 0.5 - np.abs(u)
        kf = np.floor((2.0 * a / us + b) * u + lam + 0.43)
        acc = (us >= 0.07) & (v <= vr)
        valid = ~acc & (kf >= 0) & ~((us < 0.013) & (v > us))
        if valid.any():
            lhs = np.log(v[valid]) + math.log(invalpha) - np.log(a / (us[valid] ** 2) + b)
            rhs = kf[valid] * loglam - lam - gammaln(kf[valid] + 1.0)
            acc[valid.nonzero()[0][lhs <= rhs]] = True
        out[pend[acc]] = kf[acc].astype(np.int64)
        pend = pend[~acc]
    return out


def _init_block(two_l, rho, kcount, init_mode, states):
    """Vectorized configuration init; returns (occ, tagged) for all replicas."""
    n_rep = states.size
    rows = np.arange(n_rep)
    occ = np.zeros((n_rep, two_l), np.uint8)
    if init_mode == INIT_STAR:
        occ[:, 0] = 1
        for x in range(1, two_l):
            occ[:, x] = _next_unit(states, rows) < rho
        return occ, np.zeros(n_rep, np.int64)
    if init_mode == INIT_FIXED_COUNT_STAR:
        occ[:, 0] = 1
        perm = np.tile(np.arange(1, two_l, dtype=np.int64), (n_rep, 1))
        mask = _bond_mask(two_l - 1)
        for i in range(kcount - 1):
            j = _draw_below(states, rows, two_l - 1 - i, mask) + i
            tmp = perm[rows, i].copy()
            perm[rows, i] = perm[rows, j]
            perm[rows, j] = tmp
            occ[rows, perm[:, i]] = 1
        return occ, np.zeros(n_rep, np.int64)
    # INIT_STATIONARY
    mask = _bond_mask(two_l)
    pend = rows
    while pend.size:
        for x in range(two_l):
            occ[pend, x] = _next_unit(states, pend) < rho
        pend = pend[occ[pend].sum(axis=1) == 0]
    tagged = np.empty(n_rep, np.int64)
    pend = rows
    while pend.size:
        site = _draw_below(states, pend, two_l, mask)
        ok = occ[pend, site] == 1
        tagged[pend[ok]] = site[ok]
        pend = pend[~ok]
    return occ, tagged


def _run_block(occ, tagged, states, times, collect):
    """Advance all replicas through the recording grid, one event per round.

    collect: callable(g, disp, jfull, occ) invoked at each recording time;
    jfull[r, b] is the signed crossing count of bond b for replica r.
    """
    n_rep, two_l = occ.shape
    rate = 0.5 * two_l
    mask = _bond_mask(two_l)
    disp = np.zeros(n_rep, np.int64)
    jfull = np.zeros((n_rep, two_l), np.int64)
    rows = np.arange(n_rep)
    t_prev = 0.0
    for g in range(times.size):
        rem = _poisson(rate * (times[g] - t_prev), states, rows)
        while True:
            act = np.nonzero(rem > 0)[0]
            if act.size == 0:
                break
            b = _draw_below(states, act, two_l, mask)
            x = b
            y = b + 1
            y[y == two_l] = 0
            ox = occ[act, x]
            oy = occ[act, y]
            occ[act, x] = oy
            occ[act, y] = ox
            jfull[act, b] += ox.astype(np.int64) - oy.astype(np.int64)
            moved = ox != oy
            mx = moved & (tagged[act] == x)
            my = moved & (tagged[act] == y)
            tagged[act[mx]] = y[mx]
            tagged[act[my]] = x[my]
            disp[act[mx]] += 1
            disp[act[my]] -= 1
            rem[act] -= 1
        collect(g, disp, jfull, occ)
        t_prev = times[g]


def simulate_single(occ0, tagged0, seed, times, window_w, want_snapshots):
    """Mirror of the numba simulate_single; see _kernels_numba for the contract."""
    two_l = occ0.size
    n_rec = times.size
    occ = occ0.copy().reshape(1, two_l)
    tagged = np.array([tagged0], np.int64)
    states = _mix64(np.array([np.uint64(seed) ^ (GOLDEN * _ONE)], np.uint64))
    x_out = np.empty(n_rec, np.int64)
    j_out = np.empty(n_rec, np.int64)
    jwin_out = np.zeros((n_rec, window_w), np.int64)
    n_snap = n_rec if want_snapshots else 0
    snaps = np.zeros((n_snap, two_l), np.uint8)

    def collect(g, disp, jfull, occ_now):
        x_out[g] = disp[0]
        j_out[g] = jfull[0, two_l - 1]
        if window_w > 0:
            jwin_out[g] = jfull[0, :window_w]
        if want_snapshots:
            snaps[g] = occ_now[0]

    _run_block(occ, tagged, states, times, collect)
    return x_out, j_out, jwin_out, snaps


def simulate_ensemble(two_l, rho, kcount, init_mode, n_rep, rep_offset,
                      base_seed, times, want_final_occ):
    """Mirror of the numba simulate_ensemble; see _kernels_numba for the contract."""
    n_rec = times.size
    reps = np.arange(rep_offset, rep_offset + n_rep, dtype=np.uint64)
    states = _mix64(np.uint64(base_seed) ^ (GOLDEN * (reps + _ONE)))
    occ, tagged = _init_block(two_l, rho, kcount, init_mode, states)
    rel_bond = np.where(tagged > 0, tagged - 1, two_l - 1).astype(np.int64)
    x_out = np.empty((n_rep, n_rec), np.int64)
    jrel_out = np.empty((n_rep, n_rec), np.int64)
    jfix_out = np.empty((n_rep, n_rec), np.int64)
    n_occ = n_rep if want_final_occ else 0
    occ_out = np.zeros((n_occ, two_l), np.uint8)

    rows = np.arange(n_rep)

    def collect(g, disp, jfull, occ_now):
        x_out[:, g] = disp
        jrel_out[:, g] = jfull[rows, rel_bond]
        jfix_out[:, g] = jfull[:, two_l - 1]
        if want_final_occ and g == n_rec - 1:
            occ_out[:] = occ_now

    _run_block(occ, tagged, states, times, collect)
    return x_out, jrel_out, jfix_out, occ_out
