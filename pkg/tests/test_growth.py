import numpy as np
import pytest
from scipy import stats as sps

from alphatree.exact import exact_pi
from alphatree.growth import (
    UNIFORMS_PER_STEP,
    GrowableTree,
    _choose_targets_numba,
    _choose_targets_numpy,
    graft_step,
    graft_steps,
    grow,
    leaf_depth_sample,
)
from alphatree.rng import make_rng
from alphatree.tree import all_trees, stats


def shape_counts(n, alpha, samples, seed):
    rng = make_rng(seed, "validate", n, int(alpha * 100))
    counts = {}
    for _ in range(samples):
        code = grow(n, alpha, rng).to_planar().code
        counts[code] = counts.get(code, 0) + 1
    return counts


def test_single_edge():
    t = grow(1, 0.4, 0)
    assert t.n == 1
    assert t.to_planar().code == "o"
    assert leaf_depth_sample(t, make_rng(0, "leaf-sample")) == 1
    t.audit()


def test_first_step_is_cherry():
    for a in (0.0, 0.5, 1.0):
        for s in range(10):
            t = graft_step(GrowableTree.single_edge(), a, make_rng(s, "grow"))
            assert t.to_planar().code == "(oo)"
            assert leaf_depth_sample(t, make_rng(s, "leaf-sample")) == 2


def test_second_step_edge_weights():
    # from the cherry: internal edge alpha, two leaf edges (1 - alpha) each, total 2 - alpha
    a = 0.3
    u = np.array([[0.0, 0.5, 0.9]])
    k = 2
    p_int = a * (k - 1) / (k - a)
    assert p_int == pytest.approx(a / (2 - a))
    tgt, _ = _choose_targets_numpy(u, 2, a)
    assert tgt[0] == 2  # the branch node
    tgt, _ = _choose_targets_numpy(np.array([[p_int + 1e-9, 0.0, 0.9]]), 2, a)
    assert tgt[0] == 1
    tgt, left = _choose_targets_numpy(np.array([[0.99, 0.99, 0.1]]), 2, a)
    assert tgt[0] == 3 and left[0]


def test_target_kernels_agree():
    u = make_rng(1, "validate").random((5000, UNIFORMS_PER_STEP))
    for a in (0.0, 0.37, 1.0):
        t1, l1 = _choose_targets_numpy(u, 1, a)
        t2, l2 = _choose_targets_numba(u, 1, a)
        assert np.array_equal(t1, t2) and np.array_equal(l1, l2)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8])
def test_chi_square_against_exact_pi(n, alpha):
    samples = 100_000
    counts = shape_counts(n, alpha, samples, 11)
    shapes = all_trees(n)
    expected = np.array([exact_pi(t, alpha) for t in shapes]) * samples
    observed = np.array([counts.get(t.code, 0) for t in shapes])
    assert observed.sum() == samples
    assert sps.chisquare(observed, expected).pvalue > 1e-3


def test_alpha_extremes_select_single_class():
    t = grow(500, 1.0, 3)
    assert t.height() == 500  # comb
    assert stats(t.to_planar()).height == 500
    # alpha = 0: only leaf edges, so the root edge stays a single edge above the first branch
    t0 = grow(500, 0.0, 3)
    t0.audit()
    assert t0.parent[2] == 0 and t0.left[0] == 2


def test_comb_mean_leaf_depth_linear():
    for n in (10, 100, 1000):
        t = grow(n, 1.0, 0)
        # comb: leaves at depths 2..n plus a second leaf at depth n
        assert t.mean_leaf_depth() == pytest.approx((sum(range(2, n + 1)) + n) / n)


def test_registries_and_audit():
    t = grow(10**5, 0.5, 7)
    assert t.internal_registry.size == t.n - 1
    assert t.leaf_registry.size == t.n
    t.audit()
    # incremental growth keeps the bookkeeping exact
    t = grow(3, 0.6, 2)
    rng = make_rng(2, "validate")
    for _ in range(200):
        graft_step(t, 0.6, rng)
        assert t.internal_registry.size == t.n - 1
    t.audit()


def test_audit_detects_corruption():
    t = grow(50, 0.5, 1)
    t.left[t.internal_registry[3]] = -1
    with pytest.raises(AssertionError):
        t.audit()


def test_determinism():
    a = grow(20_000, 0.45, 99).to_planar()
    b = grow(20_000, 0.45, 99).to_planar()
    c = grow(20_000, 0.45, 100).to_planar()
    assert a == b and a != c


def test_batched_equals_stepwise():
    rng = make_rng(5, "validate")
    u = rng.random((300, UNIFORMS_PER_STEP))
    batch = graft_steps(GrowableTree.single_edge(), 0.4, u)
    step = GrowableTree.single_edge()
    for row in u:
        graft_steps(step, 0.4, row[None, :])
    assert batch.to_planar() == step.to_planar()


def test_geometry_matches_planar():
    t = grow(3000, 0.3, 4)
    p = t.to_planar()
    s = stats(p)
    assert t.height() == s.height
    assert t.mean_leaf_depth() == pytest.approx(s.mean_leaf_depth)
    for r in (1, 2, 5, 20):
        assert t.edges_in_ball(r) == s.edges_in_ball(r)


def test_leaf_depth_sample_is_a_leaf_depth():
    t = grow(400, 0.5, 8)
    depths = set(t.leaf_depths().tolist())
    rng = make_rng(0, "leaf-sample")
    assert all(leaf_depth_sample(t, rng) in depths for _ in range(50))


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        grow(0, 0.5)
    with pytest.raises(ValueError):
        grow(5, 1.5)
