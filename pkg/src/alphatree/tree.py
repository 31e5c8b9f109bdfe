"""Rooted planar binary trees.

A tree is stored as its canonical text code, ``T := "o" | "(" T T ")"``, read
in preorder: ``o`` is a leaf, ``(`` opens a branch vertex whose two subtrees
follow left then right. The root of degree 1 is implicit; it sits above the
first vertex token and is joined to it by the root edge.

All geometry (heights, balls, vertex depths) is computed on the byte array of
the code with vectorised numpy, so nothing here recurses on the tree depth.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterator

import numpy as np

from ._accel import HAS_NUMBA, njit

OPEN, CLOSE, LEAF_CHAR = ord("("), ord(")"), ord("o")


class TreeParseError(ValueError):
    """Malformed tree text; ``offset`` is the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset


@dataclass(frozen=True)
class PlanarTree:
    """Immutable rooted planar binary tree, identified by its canonical code.

    Construct through :func:`decode`, :data:`LEAF` and :func:`branch`; the
    constructor itself does not re-validate the code.
    """

    code: str

    def __str__(self) -> str:
        return self.code

    @property
    def is_leaf(self) -> bool:
        return self.code == "o"

    @cached_property
    def leaf_count(self) -> int:
        return self.code.count("o")

    @cached_property
    def _split_at(self) -> int:
        if self.is_leaf:
            raise ValueError("a leaf has no subtrees")
        b = _as_bytes(self.code)[1:-1]
        delta = (b == OPEN).astype(np.int64) - (b == CLOSE)
        # first position where the running depth is back to zero closes the left subtree
        return int(np.argmax(np.cumsum(delta) == 0)) + 1

    @property
    def left(self) -> "PlanarTree":
        return PlanarTree(self.code[1 : 1 + self._split_at])

    @property
    def right(self) -> "PlanarTree":
        return PlanarTree(self.code[1 + self._split_at : -1])

    @cached_property
    def vertex_depths(self) -> np.ndarray:
        """Depth (edges from the root) of every non-root vertex, in preorder."""
        return _vertex_depths(_as_bytes(self.code))

    @cached_property
    def height(self) -> int:
        return int(self.vertex_depths.max())


LEAF = PlanarTree("o")


def branch(left: PlanarTree, right: PlanarTree) -> PlanarTree:
    return PlanarTree("(" + left.code + right.code + ")")


def _as_bytes(code: str) -> np.ndarray:
    return np.frombuffer(code.encode("ascii"), dtype=np.uint8)


def encode(tree: PlanarTree) -> str:
    return tree.code


def decode(text: str | bytes) -> PlanarTree:
    """Parse tree text, raising :class:`TreeParseError` on malformed input."""
    if isinstance(text, bytes):
        raw = text
    else:
        try:
            raw = text.encode("ascii")
        except UnicodeEncodeError as exc:
            raise TreeParseError("non-ASCII character", len(text[: exc.start].encode())) from None
    # children[k] counts subtrees already parsed inside the k-th open paren
    children: list[int] = []
    done = False
    for i, c in enumerate(raw):
        if done:
            raise TreeParseError("trailing characters", i)
        if c == LEAF_CHAR or c == OPEN:
            if children and children[-1] == 2:
                raise TreeParseError("expected ')' after two subtrees", i)
            if c == OPEN:
                children.append(0)
                continue
        elif c == CLOSE:
            if not children or children[-1] != 2:
                raise TreeParseError("unexpected ')'", i)
            children.pop()
        else:
            raise TreeParseError(f"invalid character {chr(c)!r}", i)
        # a subtree just completed
        if children:
            children[-1] += 1
        else:
            done = True
    if not done:
        raise TreeParseError("unexpected end of input", len(raw))
    return PlanarTree(raw.decode("ascii"))


def mirror(tree: PlanarTree) -> PlanarTree:
    """Swap left and right at every branch vertex."""
    return PlanarTree(tree.code[::-1].translate(_SWAP_PARENS))


_SWAP_PARENS = str.maketrans("()", ")(")


@dataclass(frozen=True)
class BallShape:
    """A tree shape viewed as the radius-``radius`` ball around the root."""

    shape: PlanarTree
    radius: int

    def __post_init__(self):
        if self.radius < 1:
            raise ValueError(f"radius must be >= 1, got {self.radius}")
        if self.shape.height > self.radius:
            raise ValueError(
                f"shape of height {self.shape.height} does not fit in radius {self.radius}"
            )

    @property
    def full_height(self) -> bool:
        """True when the shape belongs to the trees of height exactly ``radius``."""
        return self.shape.height == self.radius


def _vertex_depths_numpy(b):
    delta = (b == OPEN).astype(np.int64) - (b == CLOSE)
    before = np.cumsum(delta) - delta
    return (before + 1)[b != CLOSE]


@njit
def _vertex_depths_numba(b):
    out = np.empty(b.shape[0] - (b.shape[0] - 1) // 3, dtype=np.int64)
    depth = 0
    j = 0
    for c in b:
        if c == 41:
            depth -= 1
        else:
            out[j] = depth + 1
            j += 1
            if c == 40:
                depth += 1
    return out[:j]


_vertex_depths = _vertex_depths_numba if HAS_NUMBA else _vertex_depths_numpy


def _ball_bytes_numpy(b, radius):
    delta = (b == OPEN).astype(np.int64) - (b == CLOSE)
    csum = np.cumsum(delta)
    depth = csum - delta + 1  # vertex depth for '(' and 'o'
    close_depth = csum + 1  # depth of the branch vertex a ')' closes
    keep = np.where(b == CLOSE, close_depth < radius, depth <= radius)
    out = b.copy()
    out[(b == OPEN) & (depth == radius)] = LEAF_CHAR
    return out[keep]


@njit
def _ball_bytes_numba(b, radius):
    out = np.empty(b.shape[0], dtype=np.uint8)
    depth = 0  # open branch vertices enclosing the current position
    j = 0
    for c in b:
        if c == 41:
            if depth < radius:
                out[j] = c
                j += 1
            depth -= 1
        else:
            if depth + 1 < radius:
                out[j] = c
                j += 1
            elif depth + 1 == radius:
                out[j] = 111
                j += 1
            if c == 40:
                depth += 1
    return out[:j]


_ball_bytes = _ball_bytes_numba if HAS_NUMBA else _ball_bytes_numpy


def ball_code(tree: PlanarTree, radius: int) -> str:
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    if tree.is_leaf or radius >= tree.height:
        return tree.code
    return _ball_bytes(_as_bytes(tree.code), radius).tobytes().decode("ascii")


def ball(tree: PlanarTree, radius: int) -> BallShape:
    """The subtree spanned by vertices within ``radius`` of the root."""
    return BallShape(PlanarTree(ball_code(tree, radius)), radius)


def distance(a: PlanarTree, b: PlanarTree) -> Fraction:
    """``1/(1+R)`` for the largest R at which the balls of ``a`` and ``b`` agree."""
    if a.code == b.code:
        return Fraction(0)
    # agreement is monotone in R; the radius-1 balls always agree
    lo, hi = 1, max(a.height, b.height)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ball_code(a, mid) == ball_code(b, mid):
            lo = mid
        else:
            hi = mid
    return Fraction(1, 1 + lo)


@dataclass(frozen=True)
class TreeStats:
    leaves: int
    internal_edges: int
    leaf_edges: int
    height: int
    mean_leaf_depth: float
    depth_counts: np.ndarray = field(repr=False)

    def edges_in_ball(self, radius: int) -> int:
        """Edge count of the radius-``radius`` ball (one edge per non-root vertex)."""
        if radius < 1:
            raise ValueError(f"radius must be >= 1, got {radius}")
        return int(self.depth_counts[1 : radius + 1].sum())

    def weighted_edge_total(self, alpha: float) -> float:
        return alpha * self.internal_edges + (1.0 - alpha) * self.leaf_edges


def stats(tree: PlanarTree) -> TreeStats:
    b = _as_bytes(tree.code)
    depths = tree.vertex_depths
    n = tree.leaf_count
    leaf_depths = depths[b[b != CLOSE] == LEAF_CHAR]
    return TreeStats(
        leaves=n,
        internal_edges=n - 1,
        leaf_edges=n,
        height=int(depths.max()),
        mean_leaf_depth=float(leaf_depths.mean()),
        depth_counts=np.bincount(depths),
    )


@lru_cache(maxsize=None)
def all_trees(n: int) -> tuple[PlanarTree, ...]:
    """Every tree with ``n`` leaves, a Catalan(n-1) sized tuple."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if n == 1:
        return (LEAF,)
    return tuple(
        branch(left, right)
        for n1 in range(1, n)
        for left in all_trees(n1)
        for right in all_trees(n - n1)
    )


def trees_up_to(n: int) -> Iterator[PlanarTree]:
    for m in range(1, n + 1):
        yield from all_trees(m)


@lru_cache(maxsize=None)
def all_shapes(radius: int, full_only: bool = False) -> tuple[PlanarTree, ...]:
    """Every shape of height at most ``radius`` (exactly ``radius`` if ``full_only``)."""
    if radius == 1:
        return (LEAF,)
    below = all_shapes(radius - 1)
    shapes = [LEAF] + [branch(l, r) for l in below for r in below]
    if full_only:
        return tuple(s for s in shapes if s.height == radius)
    return tuple(shapes)


def to_arrays(tree: PlanarTree) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Parent pointers, depths and leaf flags of all vertices, root included.

    Vertex 0 is the root; vertex ``k >= 1`` is the k-th vertex token of the
    code in preorder. The root's parent is -1.
    """
    b = _as_bytes(tree.code)
    delta = (b == OPEN).astype(np.int64) - (b == CLOSE)
    depth_all = np.cumsum(delta) - delta + 1
    pos = np.flatnonzero(b != CLOSE)
    depth = depth_all[pos]
    is_open = b[pos] == OPEN
    # parent of a vertex at depth d: last '(' of depth d-1 to its left
    span = len(b) + 1
    open_idx = np.flatnonzero(is_open)
    keys = depth[open_idx] * span + pos[open_idx]
    order = np.argsort(keys, kind="stable")
    keys, open_idx = keys[order], open_idx[order]
    query = (depth - 1) * span + pos
    hit = np.searchsorted(keys, query) - 1
    parent = np.empty(len(pos) + 1, dtype=np.int64)
    parent[0] = -1
    parent[1:] = np.where(depth == 1, 0, open_idx[np.maximum(hit, 0)] + 1)
    depths = np.concatenate(([0], depth))
    leaf = np.concatenate(([False], ~is_open))
    return parent, depths, leaf
