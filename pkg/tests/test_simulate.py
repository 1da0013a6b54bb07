"""Path simulation, discretisation and direct increment simulation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from decompound.io import write_increments_csv
from decompound.model import MixtureDensity, ModelParams
from decompound.simulate import CppPath, discretize, equidistant_grid, simulate_increments, simulate_path

TRUTH = ModelParams([0.8, 0.2], [2.0, -1.0], 1.0)


def test_jump_count_clt():
    path = simulate_path(1.0, TRUTH.jump_density, 1000.0, seed=11)
    assert abs(path.n_jumps - 1000) <= 4 * math.sqrt(1000)
    assert np.all(np.diff(path.jump_times) > 0)
    assert path.jump_times[0] > 0 and path.jump_times[-1] <= 1000.0


def test_vanishing_horizon():
    path = simulate_path(1.0, TRUTH.jump_density, 1e-9, seed=3)
    assert path.n_jumps == 0
    assert path.value(1e-9) == 0.0


def test_path_determinism():
    a = simulate_path(2.0, TRUTH.jump_density, 50.0, seed=99)
    b = simulate_path(2.0, TRUTH.jump_density, 50.0, seed=99)
    c = simulate_path(2.0, TRUTH.jump_density, 50.0, seed=100)
    np.testing.assert_array_equal(a.jump_times, b.jump_times)
    np.testing.assert_array_equal(a.jump_sizes, b.jump_sizes)
    assert not np.array_equal(a.jump_times, c.jump_times)


def test_path_rejects_bad_input():
    with pytest.raises(ValueError):
        simulate_path(0.0, TRUTH.jump_density, 1.0, seed=1)
    with pytest.raises(ValueError):
        CppPath(1.0, [0.5, 0.4], [1.0, 1.0])


def test_single_jump_bookkeeping():
    path = CppPath(6.0, [2.5], [5.0])
    obs = discretize(path, equidistant_grid(6, 1.0))
    np.testing.assert_array_equal(obs.z, [0, 0, 5, 0, 0, 0])
    assert obs.active.tolist() == [2]


def test_jump_on_grid_point_belongs_to_left_segment():
    path = CppPath(3.0, [1.0, 2.0], [1.0, 2.0])
    obs = discretize(path, [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(obs.z, [1.0, 2.0, 0.0])
    assert path.value(1.0) == 1.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 40))
def test_sum_conservation(seed, n):
    path = simulate_path(1.5, TRUTH.jump_density, float(n), seed)
    grid = np.sort(np.random.default_rng(seed).uniform(0, n, n - 1)) if n > 1 else np.empty(0)
    grid = np.unique(np.concatenate([grid, [float(n)]]))
    obs = discretize(path, grid)
    assert obs.z.sum() == pytest.approx(path.jump_sizes.sum(), abs=1e-9)
    assert obs.T == pytest.approx(n)


def test_zero_fraction():
    path = simulate_path(1.0, TRUTH.jump_density, 10_000.0, seed=5)
    obs = discretize(path, equidistant_grid(10_000, 1.0))
    frac = 1.0 - obs.n_active / obs.n
    assert abs(frac - math.exp(-1)) < 0.02


def test_discretize_rejects_bad_grid():
    path = CppPath(3.0, [1.5], [1.0])
    with pytest.raises(ValueError):
        discretize(path, [1.0, 0.5, 3.0])
    with pytest.raises(ValueError):
        discretize(path, [1.0, 4.0])


def test_zero_count_segments():
    obs, aux = simulate_increments(ModelParams([1e-9, 1e-9], [1, 2], 1.0), np.ones(100), seed=1)
    assert np.all(obs.z == 0.0)
    assert obs.n_active == 0 and aux.total == 0


def test_increments_match_path_route():
    n = 10_000
    obs_a, _ = simulate_increments(TRUTH, np.ones(n), seed=21)
    path = simulate_path(TRUTH.lam, TRUTH.jump_density, float(n), seed=22)
    obs_b = discretize(path, equidistant_grid(n, 1.0))
    ks = stats.ks_2samp(obs_a.z, obs_b.z).statistic
    assert ks < 0.02


@pytest.mark.parametrize("delta", [0.3, 1.0, 3.0])
def test_increment_mean(delta):
    n = 20_000
    obs, _ = simulate_increments(TRUTH, np.full(n, delta), seed=7)
    expected = delta * TRUTH.lam * float(TRUTH.rho @ TRUTH.mu)
    se = obs.z.std(ddof=1) / math.sqrt(n)
    assert abs(obs.z.mean() - expected) < 4 * se


def test_aux_matches_active_set():
    obs, aux = simulate_increments(TRUTH, np.full(3000, 0.7), seed=8)
    aux.check(obs)
    assert np.all(aux.n >= 1)
    np.testing.assert_array_equal(aux.index, np.flatnonzero(obs.z != 0))


def test_conditional_normality_by_stratum():
    obs, aux = simulate_increments(TRUTH, np.ones(40_000), seed=9)
    z = obs.z[aux.index]
    for stratum in ([1, 0], [0, 1], [1, 1], [2, 0], [3, 0]):
        rows = np.all(aux.counts == stratum, axis=1)
        assert rows.sum() > 200
        n = sum(stratum)
        resid = (z[rows] - np.dot(stratum, TRUTH.mu)) / math.sqrt(n / TRUTH.tau)
        assert stats.kstest(resid, "norm").pvalue > 1e-3


def test_increment_counts_poisson():
    obs, aux = simulate_increments(TRUTH, np.ones(20_000), seed=10)
    full = np.zeros((obs.n, 2), dtype=int)
    full[aux.index] = aux.counts
    for j, psi in enumerate(TRUTH.psi):
        assert abs(full[:, j].mean() - psi) < 4 * math.sqrt(psi / obs.n)


def test_seed_fixes_files(tmp_path):
    durations = np.linspace(0.5, 2.0, 500)
    for name in ("a.csv", "b.csv"):
        obs, _ = simulate_increments(TRUTH, durations, seed=1234)
        write_increments_csv(obs, tmp_path / name)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_draw_jumps_mixture_law():
    f = MixtureDensity([0.3, 0.7], [-2.0, 3.0], 4.0)
    path = simulate_path(1.0, f, 20_000.0, seed=4)
    cdf = lambda x: 0.3 * stats.norm.cdf(x, -2, 0.5) + 0.7 * stats.norm.cdf(x, 3, 0.5)  # noqa: E731
    assert stats.kstest(path.jump_sizes, cdf).pvalue > 1e-3
