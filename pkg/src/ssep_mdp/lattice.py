"""Continuous-time exclusion dynamics on a periodic ring via bond swaps.

Sites live on a ring of size 2L and are addressed two ways: array index
``i`` in [0, 2L) and signed site label ``x`` in [-L, L-1] with
``i = x mod 2L``.  Bond ``b`` joins indices ``b`` and ``(b+1) mod 2L``; bond
``2L-1`` is the bond between sites -1 and 0 whose signed crossing count is
the origin current.  Each bond swaps its endpoint values at rate 1/2, so
the total event rate is L independent of the configuration; the tagged
particle moves with a swap only when the swap actually moves a particle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backend import get_kernels
from .errors import ParameterError

DEFAULT_RING_SAFETY_FACTOR = 10.0

INIT_MODES = {"star": 0, "stationary": 1, "fixed_count_star": 2}


def pack_bits(occ: np.ndarray) -> np.ndarray:
    """Pack a 0/1 uint8 vector into uint64 words, little-endian bit order."""
    occ = np.asarray(occ, dtype=np.uint8)
    n_words = (occ.size + 63) // 64
    padded = np.zeros(n_words * 64, np.uint8)
    padded[:occ.size] = occ
    return np.packbits(padded, bitorder="little").view(np.uint64)


def unpack_bits(words: np.ndarray, n_sites: int) -> np.ndarray:
    """Inverse of pack_bits."""
    bytes_ = np.ascontiguousarray(words, dtype=np.uint64).view(np.uint8)
    return np.unpackbits(bytes_, bitorder="little")[:n_sites].copy()


def site_to_index(x, two_l: int):
    return np.mod(x, two_l)


def index_to_site(i, two_l: int):
    """Map array index to the signed site label in [-L, L-1]."""
    i = np.asarray(i)
    half = two_l // 2
    return np.where(i < half, i, i - two_l)


@dataclass(frozen=True)
class Configuration:
    """Bit-packed ring occupation state with a tagged particle."""

    occupancy: np.ndarray  # packed uint64 words
    two_l: int
    tagged_site: int  # array index in [0, 2L)
    particle_count: int

    def __post_init__(self):
        occ = self.occupancy_array()
        count = int(occ.sum())
        if count != self.particle_count:
            raise ParameterError(
                f"particle_count {self.particle_count} != set bits {count}")
        if not (0 < self.particle_count < self.two_l):
            raise ParameterError(
                f"degenerate lattice: particle_count={self.particle_count} on ring {self.two_l}")
        if not (0 <= self.tagged_site < self.two_l):
            raise ParameterError(f"tagged_site {self.tagged_site} outside ring")
        if occ[self.tagged_site] != 1:
            raise ParameterError("tagged site is not occupied")

    @classmethod
    def from_occupancy(cls, occ, tagged_site: int) -> "Configuration":
        occ = np.asarray(occ, dtype=np.uint8)
        return cls(occupancy=pack_bits(occ), two_l=occ.size,
                   tagged_site=int(tagged_site), particle_count=int(occ.sum()))

    def occupancy_array(self) -> np.ndarray:
        """Unpacked 0/1 uint8 view of the ring, index order."""
        return unpack_bits(self.occupancy, self.two_l)


@dataclass(frozen=True)
class SimParams:
    """Run parameters for one trajectory."""

    rho: float
    L: int
    horizon: float
    seed: int
    record_grid: tuple = ()
    ring_safety_factor: float = DEFAULT_RING_SAFETY_FACTOR
    window_w: int = 0
    record_snapshots: bool = False

    def __post_init__(self):
        if not (0.0 < self.rho < 1.0):
            raise ParameterError(f"rho must lie in (0,1), got {self.rho}")
        if self.L < 1:
            raise ParameterError(f"L must be >= 1, got {self.L}")
        if self.horizon < 0:
            raise ParameterError(f"horizon must be >= 0, got {self.horizon}")
        grid = tuple(float(t) for t in self.record_grid)
        if list(grid) != sorted(grid):
            raise ParameterError("record_grid must be sorted")
        if grid and (grid[0] < 0 or grid[-1] > self.horizon):
            raise ParameterError("record_grid entries must lie in [0, horizon]")
        if 2 * self.L < self.ring_safety_factor * np.sqrt(self.horizon):
            raise ParameterError(
                f"ring too small: need 2L >= {self.ring_safety_factor}*sqrt(horizon)"
                f" = {self.ring_safety_factor * np.sqrt(self.horizon):.1f}, got {2 * self.L}")
        if not (0 <= self.window_w <= 2 * self.L - 1):
            raise ParameterError("window_w must lie in [0, 2L-1]")
        object.__setattr__(self, "record_grid", grid)


@dataclass(frozen=True)
class TrajectoryRecord:
    """Observation series for one replica."""

    times: np.ndarray
    X: np.ndarray
    J_origin: np.ndarray
    two_l: int
    window_currents: np.ndarray | None = None
    snapshots: np.ndarray | None = None

    def __post_init__(self):
        n = self.times.size
        for name in ("X", "J_origin"):
            if getattr(self, name).size != n:
                raise ParameterError(f"{name} length != times length")
        for name in ("window_currents", "snapshots"):
            arr = getattr(self, name)
            if arr is not None and arr.shape[0] != n:
                raise ParameterError(f"{name} rows != times length")
        if n and self.times[0] == 0.0:
            if self.X[0] != 0 or self.J_origin[0] != 0:
                raise ParameterError("series at time 0 must vanish")

    def index_of(self, t: float) -> int:
        idx = int(np.searchsorted(self.times, t))
        if idx >= self.times.size or abs(self.times[idx] - t) > 1e-9 * max(1.0, abs(t)):
            raise ParameterError(f"time {t} not on the recording grid")
        return idx

    def occupancy_at(self, t: float) -> np.ndarray:
        from .errors import DataError

        if self.snapshots is None:
            raise DataError("trajectory was recorded without snapshots")
        return self.snapshots[self.index_of(t)]


def init_bernoulli_star(rho: float, L: int, rng) -> Configuration:
    """Product-measure start conditioned on a particle at the origin.

    Fully occupied draws (possible on a finite ring at extreme rho) are
    resampled, since degenerate lattices are rejected by Configuration.
    """
    if not (0.0 < rho < 1.0):
        raise ParameterError(f"rho must lie in (0,1), got {rho}")
    if L < 1:
        raise ParameterError(f"L must be >= 1, got {L}")
    while True:
        occ = (rng.random(2 * L) < rho).astype(np.uint8)
        occ[0] = 1
        if occ.sum() < 2 * L:
            return Configuration.from_occupancy(occ, tagged_site=0)


def init_fixed_count_star(k: int, L: int, rng) -> Configuration:
    """Uniform k-particle start conditioned on a particle at the origin."""
    two_l = 2 * L
    if not (1 <= k <= two_l - 1):
        raise ParameterError(f"particle count must lie in [1, 2L-1], got {k}")
    occ = np.zeros(two_l, np.uint8)
    occ[0] = 1
    if k > 1:
        extra = rng.choice(np.arange(1, two_l), size=k - 1, replace=False)
        occ[extra] = 1
    return Configuration.from_occupancy(occ, tagged_site=0)


def init_bernoulli(rho: float, L: int, rng) -> Configuration:
    """Plain product-measure start; tags the particle at a uniform occupied site."""
    if not (0.0 < rho < 1.0):
        raise ParameterError(f"rho must lie in (0,1), got {rho}")
    two_l = 2 * L
    while True:
        occ = (rng.random(two_l) < rho).astype(np.uint8)
        if 0 < occ.sum() < two_l:
            break
    while True:
        site = int(rng.integers(two_l))
        if occ[site] == 1:
            return Configuration.from_occupancy(occ, tagged_site=site)


def apply_bond_swap(occ: np.ndarray, tagged: int, bond: int):
    """Apply one bond swap in place; returns (tagged', d_disp, d_current).

    d_current is the signed particle crossing of the swapped bond (+1 for a
    move from index b to b+1).  Single source of truth for the elementary
    transition, shared by tests and the exact-distribution builder.
    """
    two_l = occ.size
    x = bond
    y = (bond + 1) % two_l
    ox, oy = int(occ[x]), int(occ[y])
    if ox == oy:
        return tagged, 0, 0
    occ[x], occ[y] = oy, ox
    d_current = ox - oy
    if tagged == x:
        return y, 1, d_current
    if tagged == y:
        return x, -1, d_current
    return tagged, 0, d_current


def run_stirring(config: Configuration, params: SimParams) -> TrajectoryRecord:
    """Simulate one trajectory, observing at params.record_grid times."""
    if config.two_l != 2 * params.L:
        raise ParameterError("config and params disagree on ring size")
    times = np.asarray(params.record_grid if params.record_grid else (params.horizon,),
                       dtype=np.float64)
    kern = get_kernels()
    x, j, jwin, snaps = kern.simulate_single(
        config.occupancy_array(), config.tagged_site,
        np.uint64(params.seed & 0xFFFFFFFFFFFFFFFF), times,
        params.window_w, params.record_snapshots)
    return TrajectoryRecord(
        times=times, X=x, J_origin=j, two_l=config.two_l,
        window_currents=jwin if params.window_w > 0 else None,
        snapshots=snaps if params.record_snapshots else None)


@dataclass(frozen=True)
class EnsembleResult:
    times: np.ndarray
    X: np.ndarray       # (replicas, n_times) tagged displacements
    J_rel: np.ndarray   # current through the bond left of the initial tagged site
    J_fix: np.ndarray   # current through the fixed bond (-1, 0)
    final_occ: np.ndarray | None = None


def run_ensemble(L: int, times, replicas: int, seed: int, *, rho: float = 0.5,
                 kcount: int = 0, init_mode: str = "star",
                 want_final_occ: bool = False, chunk: int = 65536,
                 backend: str | None = None) -> EnsembleResult:
    """Independent replicas with in-kernel initialization.

    init_mode:
      star              origin occupied, rest Bernoulli(rho), tagged at 0
      stationary        plain Bernoulli(rho), tagged at a uniform occupied site
      fixed_count_star  origin occupied plus kcount-1 uniform extras, tagged at 0
    """
    if init_mode not in INIT_MODES:
        raise ParameterError(f"init_mode must be one of {sorted(INIT_MODES)}")
    if init_mode != "fixed_count_star" and not (0.0 < rho < 1.0):
        raise ParameterError(f"rho must lie in (0,1), got {rho}")
    if init_mode == "fixed_count_star" and not (1 <= kcount <= 2 * L - 1):
        raise ParameterError(f"kcount must lie in [1, 2L-1], got {kcount}")
    if replicas < 1:
        raise ParameterError("replicas must be >= 1")
    times = np.asarray(times, dtype=np.float64)
    kern = get_kernels(backend)
    mode = INIT_MODES[init_mode]
    xs, jrels, jfixs, occs = [], [], [], []
    done = 0
    while done < replicas:
        n = min(chunk, replicas - done)
        x, jr, jf, occ = kern.simulate_ensemble(
            2 * L, rho, kcount, mode, n, done,
            np.uint64(seed & 0xFFFFFFFFFFFFFFFF), times, want_final_occ)
        xs.append(x)
        jrels.append(jr)
        jfixs.append(jf)
        if want_final_occ:
            occs.append(occ)
        done += n
    return EnsembleResult(
        times=times,
        X=np.concatenate(xs), J_rel=np.concatenate(jrels),
        J_fix=np.concatenate(jfixs),
        final_occ=np.concatenate(occs) if want_final_occ else None)


def unwrap_displacement(record: TrajectoryRecord) -> np.ndarray:
    """Cumulative signed tagged displacement, never reduced modulo ring size."""
    return record.X.copy()


def fold_displacement(x, two_l: int):
    """Ring site label in [-L, L-1] visited by an unwrapped displacement from 0."""
    return index_to_site(np.mod(np.asarray(x), two_l), two_l)
