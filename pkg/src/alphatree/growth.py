"""Sampling ``pi_{alpha,n}`` by running the grafting chain.

Node layout of a :class:`GrowableTree` with ``n`` leaves: node 0 is the root,
node 1 the first leaf, and graft step ``k`` (taking the tree from ``k`` to
``k + 1`` leaves) creates branch node ``2k`` and leaf node ``2k + 1``. Every
edge is named by its lower endpoint, so the internal-edge registry is the list
of branch nodes and the leaf-edge registry the list of leaves. A graft on the
edge above ``b`` keeps ``b``'s edge in its class and appends one entry to
each registry, which makes both registries append-only.

Each step consumes three uniforms, in order: category, index within the
category, side of the new leaf.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._accel import HAS_NUMBA, njit
from .exact import check_alpha
from .rng import as_rng
from .tree import PlanarTree, TreeStats, stats

UNIFORMS_PER_STEP = 3


@njit
def _apply_grafts_numba(targets, new_left, parent, left, right, k0):
    for i in range(targets.shape[0]):
        k = k0 + i
        b = targets[i]
        c = 2 * k
        d = c + 1
        a = parent[b]
        if left[a] == b:
            left[a] = c
        else:
            right[a] = c
        parent[c] = a
        parent[b] = c
        parent[d] = c
        if new_left[i]:
            left[c] = d
            right[c] = b
        else:
            left[c] = b
            right[c] = d


def _apply_grafts_python(targets, new_left, parent, left, right, k0):
    # plain lists are several times faster than numpy scalar indexing
    P, L, Rt = parent.tolist(), left.tolist(), right.tolist()
    for i, (b, nl) in enumerate(zip(targets.tolist(), new_left.tolist())):
        c = 2 * (k0 + i)
        d = c + 1
        a = P[b]
        if L[a] == b:
            L[a] = c
        else:
            Rt[a] = c
        P[c] = a
        P[b] = c
        P[d] = c
        if nl:
            L[c], Rt[c] = d, b
        else:
            L[c], Rt[c] = b, d
    parent[:] = P
    left[:] = L
    right[:] = Rt


_apply_grafts = _apply_grafts_numba if HAS_NUMBA else _apply_grafts_python


@njit
def _depths_numba(parent, left, right):
    n = parent.shape[0]
    depth = np.zeros(n, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    top = 0
    stack[0] = left[0]
    depth[left[0]] = 1
    while top >= 0:
        v = stack[top]
        top -= 1
        for c in (left[v], right[v]):
            if c >= 0:
                depth[c] = depth[v] + 1
                top += 1
                stack[top] = c
    return depth


def _depths_numpy(parent, left, right):
    # pointer jumping: O(n log height) with no Python-level loop over nodes
    depth = (parent >= 0).astype(np.int64)
    anc = parent.copy()
    live = np.flatnonzero(anc >= 0)
    while live.size:
        up = anc[live]
        depth[live] += np.where(up >= 0, depth[np.maximum(up, 0)], 0)
        anc[live] = np.where(up >= 0, anc[np.maximum(up, 0)], -1)
        live = live[anc[live] >= 0]
    return depth


_depths = _depths_numba if HAS_NUMBA else _depths_numpy


@njit
def _encode_kernel(left, right, n_leaves):
    out = np.empty(3 * n_leaves - 2, dtype=np.uint8)
    stack = np.empty(2 * n_leaves + 1, dtype=np.int64)
    # negative entries mark a pending ')'
    top = 0
    stack[0] = left[0]
    pos = 0
    while top >= 0:
        v = stack[top]
        top -= 1
        if v < 0:
            out[pos] = 41
            pos += 1
        elif left[v] < 0:
            out[pos] = 111
            pos += 1
        else:
            out[pos] = 40
            pos += 1
            stack[top + 1] = -1
            stack[top + 2] = right[v]
            stack[top + 3] = left[v]
            top += 3
    return out


_encode = _encode_kernel


@dataclass
class GrowableTree:
    """Flat, index-based mutable binary tree grown by grafting."""

    parent: np.ndarray
    left: np.ndarray
    right: np.ndarray
    n: int
    _depth: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def single_edge(cls, capacity: int = 1) -> "GrowableTree":
        size = 2 * max(capacity, 1)
        parent = np.full(size, -1, dtype=np.int64)
        left = np.full(size, -1, dtype=np.int64)
        right = np.full(size, -1, dtype=np.int64)
        left[0] = 1
        parent[1] = 0
        return cls(parent, left, right, 1)

    @property
    def leaf_count(self) -> int:
        return self.n

    @property
    def capacity(self) -> int:
        return self.parent.shape[0] // 2

    @property
    def internal_registry(self) -> np.ndarray:
        """Lower endpoints of the ``n - 1`` internal edges (the branch nodes)."""
        return np.arange(2, 2 * self.n, 2, dtype=np.int64)

    @property
    def leaf_registry(self) -> np.ndarray:
        """Lower endpoints of the ``n`` leaf edges (the leaves)."""
        return np.arange(1, 2 * self.n, 2, dtype=np.int64)

    def _reserve(self, n_total: int) -> None:
        if n_total <= self.capacity:
            return
        size = 2 * max(n_total, 2 * self.capacity)
        for name in ("parent", "left", "right"):
            old = getattr(self, name)
            new = np.full(size, -1, dtype=np.int64)
            new[: old.shape[0]] = old
            setattr(self, name, new)

    def _view(self):
        m = 2 * self.n
        return self.parent[:m], self.left[:m], self.right[:m]

    def depths(self) -> np.ndarray:
        """Depth of every node (root 0); cached until the next graft."""
        if self._depth is None:
            self._depth = _depths(*self._view())
        return self._depth

    def leaf_depths(self) -> np.ndarray:
        return self.depths()[1::2]

    def height(self) -> int:
        return int(self.leaf_depths().max())

    def mean_leaf_depth(self) -> float:
        return float(self.leaf_depths().mean())

    def depth_counts(self) -> np.ndarray:
        """Number of non-root vertices at each depth (index 0 is 0)."""
        counts = np.bincount(self.depths())
        counts[0] = 0
        return counts

    def edges_in_ball(self, radius: int) -> int:
        return int(self.depth_counts()[1 : radius + 1].sum())

    def to_planar(self) -> PlanarTree:
        _, left, right = self._view()
        return PlanarTree(_encode(left, right, self.n).tobytes().decode("ascii"))

    def stats(self) -> TreeStats:
        return stats(self.to_planar())

    def audit(self) -> None:
        """Walk the whole tree and check pointer and registry consistency."""
        parent, left, right = self._view()
        n = self.n
        internal, leaves = self.internal_registry, self.leaf_registry
        if internal.size != n - 1 or leaves.size != n:
            raise AssertionError("registry sizes disagree with the leaf count")
        if np.intersect1d(internal, leaves).size:
            raise AssertionError("an edge appears in both registries")
        if not np.all(left[leaves] < 0) or not np.all(right[leaves] < 0):
            raise AssertionError("a registered leaf has children")
        if not np.all(left[internal] >= 0) or not np.all(right[internal] >= 0):
            raise AssertionError("a registered branch node lacks a child")
        nodes = np.arange(1, 2 * n)
        p = parent[nodes]
        if np.any(p < 0):
            raise AssertionError("non-root node without parent")
        if not np.all((left[p] == nodes) ^ (right[p] == nodes)):
            raise AssertionError("parent does not point back to exactly one child")
        if right[0] != -1 or parent[left[0]] != 0:
            raise AssertionError("root must have exactly one child")
        depth = _depths_numpy(parent, left, right)
        if np.any(depth[nodes] < 1):
            raise AssertionError("node unreachable from the root")


def _choose_targets_numpy(u, k0, alpha):
    """Lower endpoints of the grafted edges and new-leaf sides, steps ``k0, k0+1, ...``."""
    k = np.arange(k0, k0 + u.shape[0], dtype=np.int64)
    kf = k.astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        p_internal = np.where(k > 1, alpha * (kf - 1) / (kf - alpha), 0.0)
    internal = u[:, 0] < p_internal
    j_int = np.minimum((u[:, 1] * (kf - 1)).astype(np.int64), np.maximum(k - 2, 0))
    j_leaf = np.minimum((u[:, 1] * kf).astype(np.int64), k - 1)
    # registry lookups: internal[j] = 2(j+1), leaf[j] = 2j+1
    targets = np.where(internal, 2 * (j_int + 1), 2 * j_leaf + 1)
    return targets, u[:, 2] < 0.5


@njit
def _choose_targets_numba(u, k0, alpha):
    steps = u.shape[0]
    targets = np.empty(steps, dtype=np.int64)
    new_left = np.empty(steps, dtype=np.bool_)
    for i in range(steps):
        k = k0 + i
        p_internal = alpha * (k - 1) / (k - alpha) if k > 1 else 0.0
        if u[i, 0] < p_internal:
            j = min(int(u[i, 1] * (k - 1)), k - 2)
            targets[i] = 2 * (j + 1)
        else:
            j = min(int(u[i, 1] * k), k - 1)
            targets[i] = 2 * j + 1
        new_left[i] = u[i, 2] < 0.5
    return targets, new_left


_choose_targets = _choose_targets_numba if HAS_NUMBA else _choose_targets_numpy


def graft_steps(tree: GrowableTree, alpha: float, u: np.ndarray) -> GrowableTree:
    """Apply ``len(u)`` graft steps driven by rows of uniforms ``u``."""
    steps = u.shape[0]
    if steps == 0:
        return tree
    k0 = tree.n
    tree._reserve(k0 + steps)
    targets, new_left = _choose_targets(u, k0, float(alpha))
    parent, left, right = tree.parent, tree.left, tree.right
    _apply_grafts(targets, new_left, parent, left, right, k0)
    tree.n = k0 + steps
    tree._depth = None
    return tree


def graft_step(tree: GrowableTree, alpha: float, rng) -> GrowableTree:
    """One grafting step in place; returns the same tree with one more leaf."""
    check_alpha(alpha)
    rng = as_rng(rng)
    return graft_steps(tree, alpha, rng.random((1, UNIFORMS_PER_STEP)))


def grow(n: int, alpha: float, seed=0) -> GrowableTree:
    """A tree distributed as ``pi_{alpha,n}``, grown from the single edge.

    ``seed`` is an integer (derived through the ``grow`` stream tag) or a
    ``numpy.random.Generator``.
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    check_alpha(alpha)
    rng = as_rng(seed, "grow")
    tree = GrowableTree.single_edge(n)
    return graft_steps(tree, alpha, rng.random((n - 1, UNIFORMS_PER_STEP)))


def leaf_depth_sample(tree: GrowableTree, rng) -> int:
    """Depth of a uniformly chosen leaf."""
    rng = as_rng(rng, "leaf-sample")
    j = int(rng.integers(tree.n))
    return int(tree.depths()[2 * j + 1])
