"""Backend selection and numba/numpy kernel equivalence."""

import numpy as np
import pytest

from ssep_mdp import backend
from ssep_mdp.errors import ParameterError
from ssep_mdp.lattice import (SimParams, init_bernoulli_star, run_ensemble,
                              run_stirring)


class TestSelection:
    def test_env_flag(self, monkeypatch):
        monkeypatch.setenv("SSEP_MDP_BACKEND", "numpy")
        assert backend.active_backend() == "numpy"
        monkeypatch.setenv("SSEP_MDP_BACKEND", "numba")
        assert backend.active_backend() == "numba"
        monkeypatch.delenv("SSEP_MDP_BACKEND")
        assert backend.active_backend() == "numba"  # numba installed here

    def test_invalid_value(self, monkeypatch):
        monkeypatch.setenv("SSEP_MDP_BACKEND", "cuda")
        with pytest.raises(ParameterError):
            backend.requested_backend()

    def test_thread_count_precedence(self, monkeypatch):
        monkeypatch.setenv("SSEP_MDP_THREADS", "3")
        assert backend.thread_count() == 3
        assert backend.thread_count(2) == 2
        monkeypatch.delenv("SSEP_MDP_THREADS")
        assert backend.thread_count() >= 1
        monkeypatch.setenv("SSEP_MDP_THREADS", "zero")
        with pytest.raises(ParameterError):
            backend.thread_count()


class TestBitIdentity:
    def test_single_trajectory(self, monkeypatch):
        rng = np.random.default_rng(1)
        cfg = init_bernoulli_star(0.5, 32, rng)
        params = SimParams(rho=0.5, L=32, horizon=5.0, seed=42,
                           record_grid=(1.0, 5.0), window_w=8,
                           record_snapshots=True)
        a = run_stirring(cfg, params)
        monkeypatch.setenv("SSEP_MDP_BACKEND", "numpy")
        b = run_stirring(cfg, params)
        assert np.array_equal(a.X, b.X)
        assert np.array_equal(a.J_origin, b.J_origin)
        assert np.array_equal(a.window_currents, b.window_currents)
        assert np.array_equal(a.snapshots, b.snapshots)

    @pytest.mark.parametrize("mode,kw", [
        ("star", {"rho": 0.3}),
        ("stationary", {"rho": 0.5}),
        ("fixed_count_star", {"kcount": 3}),
    ])
    def test_ensembles(self, mode, kw):
        common = dict(L=8, times=[0.5, 2.0], replicas=500, seed=7,
                      init_mode=mode, want_final_occ=True, **kw)
        a = run_ensemble(**common, backend="numba")
        b = run_ensemble(**common, backend="numpy")
        assert np.array_equal(a.X, b.X)
        assert np.array_equal(a.J_rel, b.J_rel)
        assert np.array_equal(a.J_fix, b.J_fix)
        assert np.array_equal(a.final_occ, b.final_occ)

    def test_large_lambda_intervals(self):
        # exercises the PTRS branch in both backends
        a = run_ensemble(32, [40.0], 50, 17, init_mode="star", rho=0.5,
                         backend="numba")
        b = run_ensemble(32, [40.0], 50, 17, init_mode="star", rho=0.5,
                         backend="numpy")
        assert np.array_equal(a.X, b.X)
        assert np.array_equal(a.J_fix, b.J_fix)
