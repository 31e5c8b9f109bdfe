import numpy as np
import pytest

from alphatree.dimensions import (
    _propagate_numba,
    _propagate_numpy,
    _walkers_numba,
    _walkers_numpy,
    ball_volume_curve,
    environment_return_curve,
    exact_return_probabilities,
    finite_size_distance_scaling,
    fit_power_law,
    hausdorff_estimate,
    return_probability_curve,
    spectral_estimate,
    walk_graph,
)
from alphatree.limit import SpineEnvironment
from alphatree.rng import make_rng
from alphatree.tree import PlanarTree, decode


def test_synthetic_hausdorff_exact():
    r = np.arange(1, 65, dtype=float)
    fit = fit_power_law(r, r**2, (32, 64))
    assert fit.slope == pytest.approx(2.0, abs=1e-12)
    assert fit.slope_stderr == pytest.approx(0.0, abs=1e-12)
    assert fit.window == (32.0, 64.0)
    assert fit.log_x.size == 33


def test_synthetic_spectral_exact():
    t = np.arange(2, 4097, 2, dtype=float)
    fit = fit_power_law(t, t ** (-2 / 3), scale=-2)
    assert fit.dimension == pytest.approx(4 / 3, abs=1e-12)


def test_degenerate_window():
    r = np.arange(1, 20, dtype=float)
    with pytest.raises(ValueError, match="degenerate"):
        fit_power_law(r, r, (3, 6))
    with pytest.raises(ValueError, match="degenerate"):
        fit_power_law(np.ones(10), np.arange(1, 11.0))


def test_fit_uses_window_only():
    x = np.arange(1, 101, dtype=float)
    y = np.where(x < 50, x**5, x**2)
    assert fit_power_law(x, y, (50, 100)).slope == pytest.approx(2.0, abs=1e-12)


def test_volume_curve_alpha_one_exact():
    c = ball_volume_curve(1.0, 64, 5, 0)
    assert np.array_equal(c.mean, 2 * np.arange(1, 65) - 1.0)
    assert np.all(c.stderr == 0)
    assert abs(hausdorff_estimate(c).dimension - 1) <= 0.05


def test_volume_curve_v1():
    c = ball_volume_curve(0.5, 8, 50, 3)
    assert c.mean[0] == 1 and c.stderr[0] == 0
    assert np.all(np.diff(c.mean) > 0)


def test_return_curve_invariants():
    for a in (0.5, 1.0):
        c = return_probability_curve(a, 64, 8, 1)
        assert c.mean[0] == 1 and c.mean[1] == 0
        assert c.mean[2] == pytest.approx(1 / 3, abs=1e-15)
        assert np.all(c.mean[1::2] == 0)
        assert np.all((c.mean >= 0) & (c.mean <= 1))
        t, m, s = c.even()
        assert np.all(t % 2 == 0) and t[0] == 0
        assert c.environments == 8


def test_return_curve_rejects_odd_tmax():
    with pytest.raises(ValueError):
        return_probability_curve(0.5, 63, 2, 0)
    with pytest.raises(ValueError):
        return_probability_curve(0.0, 64, 2, 0)


def test_hand_checked_cherry_walk():
    # root - v - {leaf a, leaf b}: p(2) = 1/3, p(4) = 1/3 * 1/3 + 2/3 * 1/3
    g = walk_graph(decode("(oo)"), 10)
    p, bound = exact_return_probabilities(g, 6)
    assert p[2] == pytest.approx(1 / 3) and p[4] == pytest.approx(1 / 3)
    assert np.all(bound == 0)


def test_truncation_bound_is_honest():
    env = SpineEnvironment(0.5, 5, 0, 10**6)
    tmax = 512
    full = environment_return_curve(env, tmax, radius=tmax // 2 + 1)
    assert np.all(full.error_bound == 0)
    for rb in (8, 16, 32, 64):
        part = environment_return_curve(env, tmax, radius=rb)
        err = np.abs(part.p - full.p)
        assert np.all(err <= part.error_bound + 1e-15)
        assert np.all(part.p[: rb + 1] == pytest.approx(full.p[: rb + 1], abs=1e-15))


def test_adaptive_radius_meets_tolerance():
    env = SpineEnvironment(0.5, 6, 1, 10**6)
    rc = environment_return_curve(env, 2048, leak_tol=1e-6)
    t = np.arange(2049)
    sel = (t >= 204) & (t % 2 == 0)
    assert np.all(rc.error_bound[sel] <= 1e-6 * rc.p[sel])


def test_dp_kernels_agree():
    env = SpineEnvironment(0.4, 2, 0, 10**6).extend(40)
    g = walk_graph(PlanarTree(env.ball_code(41)), 41)
    a = _propagate_numba(g.parent, g.degree, g.active, g.radius, 200)
    b = _propagate_numpy(g.parent, g.degree, g.active, g.radius, 200)
    for x, y in zip(a, b):
        assert np.allclose(x, y, rtol=1e-12, atol=1e-300)


def test_walker_kernels_agree():
    env = SpineEnvironment(0.5, 2, 1, 10**6).extend(20)
    g = walk_graph(PlanarTree(env.ball_code(21)), 21)
    n = g.size
    child = np.arange(1, n)
    ends = np.concatenate([np.stack([g.parent[1:], child], 1), np.stack([child, g.parent[1:]], 1)])
    ends = ends[np.lexsort((ends[:, 1], ends[:, 0]))]
    ptr = np.searchsorted(ends[:, 0], np.arange(n + 1))
    u = make_rng(0, "walkers").random((300, 40))
    absorbing = g.depth >= g.radius
    assert np.array_equal(_walkers_numba(ptr, ends[:, 1].copy(), absorbing, u, 40),
                          _walkers_numpy(ptr, ends[:, 1].copy(), absorbing, u, 40))


def test_dp_and_walkers_agree():
    dp = return_probability_curve(0.5, 256, 50, 21)
    wk = return_probability_curve(0.5, 256, 50, 21, "walkers", walkers=1000)
    t, m1, s1 = dp.even()
    _, m2, s2 = wk.even()
    sel = t >= 2
    z = np.abs(m1[sel] - m2[sel]) / np.sqrt(s1[sel] ** 2 + s2[sel] ** 2)
    assert np.all(z < 3)


def test_comb_spectral_near_one():
    c = return_probability_curve(1.0, 2048, 1, 0)
    fit = spectral_estimate(c)
    assert 0.9 <= fit.dimension <= 1.1
    assert fit.window == (204.8, 2048.0)


def test_finite_scaling_alpha_one():
    res = finite_size_distance_scaling(1.0, [2**k for k in range(6, 13)], 2, 0)
    assert res.fit.dimension == pytest.approx(1.0, abs=0.05)
    assert np.all(res.stderr == 0)


def test_finite_scaling_seeds_differ():
    a = finite_size_distance_scaling(0.5, [2**k for k in range(6, 12)], 5, 1)
    b = finite_size_distance_scaling(0.5, [2**k for k in range(6, 12)], 5, 2)
    assert not np.array_equal(a.mean_depth, b.mean_depth)
    assert np.array_equal(a.sizes, b.sizes)


def test_memory_guard():
    env = SpineEnvironment(0.5, 0, 0, 10**6).extend(10)
    with pytest.raises(MemoryError):
        walk_graph(PlanarTree(env.ball_code(11)), 11, max_vertices=5)


def test_threads_do_not_change_results():
    a = return_probability_curve(0.5, 128, 6, 4, workers=1)
    b = return_probability_curve(0.5, 128, 6, 4, workers=3)
    assert np.array_equal(a.mean, b.mean) and np.array_equal(a.stderr, b.stderr)
    v1 = ball_volume_curve(0.6, 20, 10, 4, workers=1)
    v2 = ball_volume_curve(0.6, 20, 10, 4, workers=4)
    assert np.array_equal(v1.mean, v2.mean)
