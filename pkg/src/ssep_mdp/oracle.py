"""Exact transient law of (configuration, tagged site, truncated current).

Small rings only: the augmented chain is enumerated, its sparse generator
built from the same elementary transition as the simulator, and the law at
time t computed by uniformization.  Serves as the ground-truth reference
the simulator is validated against.

The tagged marginal is the ring site occupied by the tagged particle, i.e.
the unwrapped displacement folded into [-L, L-1]; simulator displacements
must be folded the same way before comparison.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.sparse

from .errors import AccuracyError, CapacityError, ParameterError
from .lattice import apply_bond_swap, index_to_site

MAX_RING = 12
MAX_STATES = 2_000_000
DEFAULT_TRUNCATION_TOL = 1e-12


@dataclass(frozen=True)
class AugmentedState:
    """One chain state: occupation bits, tagged site index, clipped current."""

    occupancy: tuple
    tagged_site: int
    current: int


@dataclass(frozen=True)
class GeneratorMatrix:
    """Sparse CTMC generator over the enumerated augmented states."""

    Q: scipy.sparse.csr_matrix
    states: tuple          # AugmentedState per row
    index: dict            # AugmentedState -> row
    two_l: int
    jmax: int
    uniformization_rate: float

    def state_count(self) -> int:
        return len(self.states)


def _enumerate_states(two_l: int, particle_count: int, jmax: int):
    states = []
    for occupied in combinations(range(two_l), particle_count):
        occ = tuple(1 if i in occupied else 0 for i in range(two_l))
        for tagged in occupied:
            for c in range(-jmax, jmax + 1):
                states.append(AugmentedState(occ, tagged, c))
    return states


def build_generator(L: int, particle_count: int, jmax: int) -> GeneratorMatrix:
    """Rate matrix of the augmented chain: every bond swaps at rate 1/2.

    Current increments saturate at +-jmax; the saturated mass is visible in
    distribution_at's clipped-mass report.
    """
    two_l = 2 * L
    if two_l > MAX_RING:
        raise ParameterError(f"exact chain limited to 2L <= {MAX_RING}, got {two_l}")
    if not (1 <= particle_count <= two_l - 1):
        raise ParameterError(
            f"particle count must lie in [1, 2L-1], got {particle_count}")
    if jmax < 1:
        raise ParameterError(f"jmax must be >= 1, got {jmax}")
    from math import comb

    n_states = comb(two_l, particle_count) * particle_count * (2 * jmax + 1)
    if n_states > MAX_STATES:
        raise CapacityError(f"state space {n_states} exceeds cap {MAX_STATES}")

    states = _enumerate_states(two_l, particle_count, jmax)
    index = {s: i for i, s in enumerate(states)}
    origin_bond = two_l - 1
    rows, cols, vals = [], [], []
    diag = np.zeros(len(states))
    for i, s in enumerate(states):
        for bond in range(two_l):
            occ = np.array(s.occupancy, dtype=np.uint8)
            tagged, _, dj = apply_bond_swap(occ, s.tagged_site, bond)
            if dj != 0:  # a real swap moved one particle
                c = s.current
                if bond == origin_bond:
                    c = max(-jmax, min(jmax, c + dj))
                target = AugmentedState(tuple(int(v) for v in occ), tagged, c)
                j = index[target]
                rows.append(i)
                cols.append(j)
                vals.append(0.5)
                diag[i] -= 0.5
    rows.extend(range(len(states)))
    cols.extend(range(len(states)))
    vals.extend(diag)
    q = scipy.sparse.csr_matrix(
        (vals, (rows, cols)), shape=(len(states), len(states)))
    return GeneratorMatrix(Q=q, states=tuple(states), index=index, two_l=two_l,
                           jmax=jmax, uniformization_rate=float(-diag.min()))


def star_initial_distribution(gen: GeneratorMatrix, particle_count: int) -> np.ndarray:
    """Uniform over k-particle patterns with an origin particle, tagged at 0, J=0."""
    p = np.zeros(gen.state_count())
    hits = [i for i, s in enumerate(gen.states)
            if s.occupancy[0] == 1 and s.tagged_site == 0 and s.current == 0
            and sum(s.occupancy) == particle_count]
    if not hits:
        raise ParameterError("no states match the requested initial law")
    p[hits] = 1.0 / len(hits)
    return p


def uniform_tagged_distribution(gen: GeneratorMatrix) -> np.ndarray:
    """Uniform over (pattern, tagged) pairs at J=0; invariant occupancy law."""
    p = np.zeros(gen.state_count())
    hits = [i for i, s in enumerate(gen.states) if s.current == 0]
    p[hits] = 1.0 / len(hits)
    return p


@dataclass(frozen=True)
class TransientLaw:
    joint: np.ndarray
    position_sites: np.ndarray   # signed site labels, ascending
    position_pmf: np.ndarray
    current_values: np.ndarray   # -jmax..jmax
    current_pmf: np.ndarray
    clipped_mass: float
    truncation_terms: int


def distribution_at(gen: GeneratorMatrix, initial_distribution, t: float,
                    truncation_tol: float = DEFAULT_TRUNCATION_TOL,
                    clip_tol: float = 1e-6) -> TransientLaw:
    """Law at time t by uniformization of exp(tQ).

    Raises AccuracyError when the mass sitting at the current clip exceeds
    clip_tol (increase jmax in that case).
    """
    p0 = np.asarray(initial_distribution, dtype=np.float64)
    if p0.size != gen.state_count():
        raise ParameterError("initial distribution has wrong length")
    if abs(p0.sum() - 1.0) > 1e-10 or p0.min() < -1e-15:
        raise ParameterError("initial distribution must be a probability vector")
    if t < 0:
        raise ParameterError("t must be >= 0")

    lam = gen.uniformization_rate
    if lam <= 0 or t == 0:
        p_t = p0.copy()
        terms = 0
    else:
        # P = I + Q/lam is stochastic; exp(tQ) = sum_m pois(m; lam*t) P^m
        p_mat = scipy.sparse.eye(gen.state_count(), format="csr") + gen.Q / lam
        mu = lam * t
        weight = np.exp(-mu)
        if weight == 0.0:
            raise AccuracyError(
                f"uniformization weight underflow at lam*t = {mu:.3g}; "
                "split the horizon into shorter steps")
        v = p0.copy()
        p_t = weight * v
        accumulated = weight
        terms = 0
        while 1.0 - accumulated > truncation_tol:
            terms += 1
            v = v @ p_mat
            weight *= mu / terms
            p_t += weight * v
            accumulated += weight
    p_t = np.maximum(p_t, 0.0)

    n_j = 2 * gen.jmax + 1
    pos_pmf = np.zeros(gen.two_l)
    cur_pmf = np.zeros(n_j)
    for i, s in enumerate(gen.states):
        pos_pmf[s.tagged_site] += p_t[i]
        cur_pmf[s.current + gen.jmax] += p_t[i]
    clipped = float(cur_pmf[0] + cur_pmf[-1])
    if clipped > clip_tol:
        raise AccuracyError(
            f"clipped current mass {clipped:.3g} exceeds {clip_tol:.3g}; increase jmax")

    sites = index_to_site(np.arange(gen.two_l), gen.two_l)
    order = np.argsort(sites)
    return TransientLaw(
        joint=p_t,
        position_sites=sites[order].astype(np.int64),
        position_pmf=pos_pmf[order],
        current_values=np.arange(-gen.jmax, gen.jmax + 1, dtype=np.int64),
        current_pmf=cur_pmf,
        clipped_mass=clipped,
        truncation_terms=terms)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def empirical_position_pmf(displacements, two_l: int) -> np.ndarray:
    """Fold simulator displacements onto ring sites, ascending site order."""
    idx = np.mod(np.asarray(displacements), two_l)
    counts = np.bincount(idx, minlength=two_l).astype(np.float64)
    sites = index_to_site(np.arange(two_l), two_l)
    return counts[np.argsort(sites)] / counts.sum()


def empirical_current_pmf(currents, jmax: int) -> np.ndarray:
    """Clip simulator currents to [-jmax, jmax] and bin, matching the oracle."""
    c = np.clip(np.asarray(currents), -jmax, jmax) + jmax
    counts = np.bincount(c, minlength=2 * jmax + 1).astype(np.float64)
    return counts / counts.sum()
