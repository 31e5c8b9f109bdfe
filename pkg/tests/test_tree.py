from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alphatree.tree import (
    LEAF,
    BallShape,
    PlanarTree,
    TreeParseError,
    all_shapes,
    all_trees,
    ball,
    ball_code,
    branch,
    decode,
    distance,
    encode,
    mirror,
    stats,
    to_arrays,
    trees_up_to,
)

CATALAN = [1, 1, 2, 5, 14, 42, 132, 429, 1430]


def trees(max_leaves=12):
    return st.recursive(st.just(LEAF), lambda kids: st.builds(branch, kids, kids),
                        max_leaves=max_leaves)


def naive_ball(t: PlanarTree, r: int) -> PlanarTree:
    if t.is_leaf or r == 1:
        return LEAF
    return branch(naive_ball(t.left, r - 1), naive_ball(t.right, r - 1))


def naive_height(t: PlanarTree) -> int:
    return 1 if t.is_leaf else 1 + max(naive_height(t.left), naive_height(t.right))


def test_encode_examples():
    assert encode(LEAF) == "o"
    assert encode(branch(LEAF, LEAF)) == "(oo)"
    assert encode(branch(branch(LEAF, LEAF), LEAF)) == "((oo)o)"


def test_decode_examples():
    assert decode("o") == LEAF
    assert decode("(o(oo))") == branch(LEAF, branch(LEAF, LEAF))
    assert decode("(o(oo))").left == LEAF
    assert decode("(o(oo))").right == decode("(oo)")


@pytest.mark.parametrize("text, offset", [
    ("(oo", 3), ("", 0), ("oo", 1), ("(o)", 2), ("(ooo)", 3), ("(ox)", 2), (")", 0), ("((oo)o", 6),
])
def test_decode_errors_carry_offset(text, offset):
    with pytest.raises(TreeParseError) as err:
        decode(text)
    assert err.value.offset == offset
    assert f"offset {offset}" in str(err.value)


def test_decode_accepts_bytes():
    assert decode(b"(oo)") == decode("(oo)")


def test_catalan_counts_and_roundtrip():
    for n in range(1, 9):
        ts = all_trees(n)
        assert len(ts) == CATALAN[n - 1]
        assert len({t.code for t in ts}) == len(ts)
        for t in ts:
            assert decode(encode(t)) == t
            assert t.leaf_count == n


@given(trees())
def test_roundtrip_property(t):
    assert decode(encode(t)) == t
    assert mirror(mirror(t)) == t
    assert mirror(t).leaf_count == t.leaf_count


def test_edge_counts_exhaustive():
    for t in trees_up_to(8):
        s = stats(t)
        n = t.leaf_count
        assert (s.internal_edges, s.leaf_edges) == (n - 1, n)
        for a in (0.0, 0.3, 0.5, 1.0):
            assert s.weighted_edge_total(a) == pytest.approx(n - a, abs=1e-12)


def test_stats_examples():
    s = stats(decode("o"))
    assert (s.leaves, s.internal_edges, s.leaf_edges, s.height) == (1, 0, 1, 1)
    s = stats(decode("(oo)"))
    assert (s.leaves, s.internal_edges, s.leaf_edges, s.height) == (2, 1, 2, 2)
    assert s.weighted_edge_total(0.3) == pytest.approx(2 - 0.3)
    s = stats(decode("((oo)o)"))
    assert (s.leaves, s.internal_edges, s.leaf_edges) == (3, 2, 3)
    assert s.edges_in_ball(1) == 1
    assert s.edges_in_ball(2) == 3
    assert s.edges_in_ball(3) == 5


def test_ball_examples():
    for t in all_trees(5):
        assert ball(t, 1).shape == LEAF
    assert ball(decode("((oo)o)"), 3).shape == decode("((oo)o)")
    assert ball(decode("((oo)(oo))"), 2).shape == decode("(oo)")


@given(trees(20), st.integers(1, 8), st.integers(1, 8))
def test_ball_properties(t, r, s):
    b = ball(t, r)
    assert b.shape == naive_ball(t, r)
    assert b.shape.height == min(r, naive_height(t))
    if s <= r:
        assert ball(b.shape, s).shape == ball(t, s).shape
    assert stats(t).edges_in_ball(r) == stats(b.shape).internal_edges + stats(b.shape).leaf_edges


def test_ball_shape_validates_height():
    with pytest.raises(ValueError):
        BallShape(decode("((oo)o)"), 2)
    assert BallShape(decode("((oo)o)"), 3).full_height
    assert not BallShape(decode("(oo)"), 3).full_height


def test_distance_examples():
    t = decode("((oo)o)")
    assert distance(t, t) == 0
    assert distance(decode("o"), decode("(oo)")) == Fraction(1, 2)
    assert isinstance(distance(decode("o"), decode("(oo)")), Fraction)
    assert distance(decode("(o(oo))"), decode("((oo)o)")) == Fraction(1, 3)


def test_metric_axioms_exhaustive():
    ts = [t for n in range(1, 6) for t in all_trees(n)]
    d = {(a.code, b.code): distance(a, b) for a, b in product(ts, ts)}
    for a, b in product(ts, ts):
        assert d[a.code, b.code] == d[b.code, a.code]
        assert (d[a.code, b.code] == 0) == (a == b)
        assert 0 <= d[a.code, b.code] <= 1
    for a, b, c in product(ts, ts, ts):
        assert d[a.code, c.code] <= max(d[a.code, b.code], d[b.code, c.code])


def test_all_shapes_heights():
    for r in range(1, 5):
        shapes = all_shapes(r)
        assert all(s.height <= r for s in shapes)
        full = all_shapes(r, full_only=True)
        assert all(s.height == r for s in full)
    # shapes of height <= r satisfy a(r) = 1 + a(r-1)^2
    assert [len(all_shapes(r)) for r in range(1, 5)] == [1, 2, 5, 26]


def test_to_arrays_consistent():
    t = decode("((oo)(o(oo)))")
    parent, depth, leaf = to_arrays(t)
    assert parent[0] == -1 and depth[0] == 0
    assert np.all(depth[1:] == depth[parent[1:]] + 1)
    assert leaf.sum() == t.leaf_count
    assert depth.max() == t.height


def test_deep_comb_no_recursion_limit():
    n = 50_000
    code = "(o" * (n - 1) + "o" + ")" * (n - 1)
    t = decode(code)
    assert t.height == n
    assert ball_code(t, 3) == "(o(oo))"
    assert distance(t, mirror(t)) == Fraction(1, 3)
