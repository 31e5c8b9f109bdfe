"""The infinite-volume measure: ball probabilities and spine environments.

Finite-``n`` ball probabilities are computed for all ``n`` up to a bound at
once, as vectors indexed by leaf count, by convolving the two sub-shape
vectors against the split law. Writing ``Gamma_alpha(k)/k!`` for the size
weights, the split law's bracket becomes ``2(1-alpha)kj + alpha k(k-1) +
alpha j(j-1)`` over ``2n(n-1)``, a sum of nonnegative separable terms, so the
convolution needs no cancellation.

Limiting ball probabilities are returned as certified brackets: the infinite
sum over outgrowth sizes is cut at ``M`` and the cut-off mass, known in
closed form, is added to the upper end.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from ._accel import njit
from .exact import check_alpha, exact_pi, mu_mass, mu_size_pmf_array, mu_size_tail
from .growth import grow
from .rng import make_rng
from .tree import LEAF, BallShape, PlanarTree, ball_code, decode

DEFAULT_TRUNCATION = 2000
# absolute outward padding applied to every truncated sum
_PAD = 1e-13


@dataclass(frozen=True)
class IntervalEstimate:
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError(f"empty interval [{self.lower}, {self.upper}]")

    @classmethod
    def exact(cls, value: float) -> "IntervalEstimate":
        return cls(value, value)

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= x <= self.upper + slack

    def clip(self, lo: float = 0.0, hi: float = 1.0) -> "IntervalEstimate":
        return IntervalEstimate(min(max(self.lower, lo), hi), max(min(self.upper, hi), lo))

    def __add__(self, other: "IntervalEstimate") -> "IntervalEstimate":
        return IntervalEstimate(self.lower + other.lower, self.upper + other.upper)

    def __mul__(self, other: "IntervalEstimate") -> "IntervalEstimate":
        # both operands are nonnegative throughout this module
        return IntervalEstimate(self.lower * other.lower, self.upper * other.upper)

    def scale(self, c: float) -> "IntervalEstimate":
        return IntervalEstimate(self.lower * c, self.upper * c)


def _as_shape(shape, radius: int | None) -> BallShape:
    if isinstance(shape, BallShape):
        return shape
    if isinstance(shape, str):
        shape = decode(shape)
    if radius is None:
        radius = shape.height
    return BallShape(shape, radius)


class BallTable:
    """Vectors ``P[n] = pi^{(R)}_{alpha,n}(shape)`` for ``n = 0..nmax``, memoised by shape code."""

    def __init__(self, alpha: float, nmax: int):
        self.alpha = check_alpha(alpha)
        self.nmax = nmax
        k = np.arange(nmax + 1, dtype=np.float64)
        log_fact = gammaln(k + 1)
        log_g = gammaln(k - alpha) - gammaln(2.0 - alpha)
        log_g[:2] = 0.0
        # size weight G(k)/k!, with Gamma_alpha(k) = (1 - alpha) G(k) for k >= 2
        self._g = np.exp(log_g - log_fact)
        self._g[0] = 0.0
        with np.errstate(divide="ignore"):
            self._pref = np.exp(log_fact - log_g) / (2.0 * k * (k - 1))
        self._pref[:3] = 0.0
        self._k = k
        self._cache: dict[tuple[str, int], np.ndarray] = {}

    def vector(self, shape: PlanarTree, radius: int) -> np.ndarray:
        key = (shape.code, radius)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._compute(shape, radius)
            hit.flags.writeable = False
            self._cache[key] = hit
        return hit

    def _compute(self, shape: PlanarTree, radius: int) -> np.ndarray:
        out = np.zeros(self.nmax + 1)
        if shape.height > radius:
            raise ValueError(f"shape of height {shape.height} exceeds radius {radius}")
        if radius == 1:
            out[1:] = 1.0
            return out
        if shape.height < radius:
            # only the shape itself has this ball
            if shape.leaf_count <= self.nmax:
                out[shape.leaf_count] = exact_pi(shape, self.alpha)
            return out
        p1 = self.vector(shape.left, radius - 1)
        p2 = self.vector(shape.right, radius - 1)
        return self.combine(p1, p2)

    def combine(self, p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
        """``sum_k q(k, n-k) p1[k] p2[n-k]`` for every ``n``."""
        a = self.alpha
        k = self._k
        n_out = self.nmax + 1
        u, v = self._g * p1, self._g * p2
        u1, ub = np.zeros_like(u), u.copy()
        u1[1], ub[1] = u[1], 0.0
        v1, vb = np.zeros_like(v), v.copy()
        v1[1], vb[1] = v[1], 0.0

        def conv(x, y):
            return np.convolve(x, y)[:n_out]

        def poly(x, y):
            # bracket numerator 2(1-a)kj + a k(k-1) + a j(j-1), split across the factors
            total = a * (conv(k * (k - 1) * x, y) + conv(x, k * (k - 1) * y))
            if a < 1.0:
                total = total + 2.0 * (1.0 - a) * conv(k * x, k * y)
            return total

        # the (1 - a) power depends on how many of the two parts have >= 2 leaves
        acc = poly(u1, vb) + poly(ub, v1)
        if a < 1.0:
            acc = acc + (1.0 - a) * poly(ub, vb)
        out = self._pref * acc
        out[:2] = 0.0
        if n_out > 2:
            out[2] = p1[1] * p2[1]
        return out


_TABLES: dict[float, BallTable] = {}


def ball_table(alpha: float, nmax: int) -> BallTable:
    table = _TABLES.get(alpha)
    if table is None or table.nmax < nmax:
        size = 64
        while size < nmax:
            size *= 2
        table = BallTable(alpha, size)
        _TABLES[alpha] = table
    return table


def ball_prob_finite_n(shape, n: int, alpha: float, radius: int | None = None) -> float:
    """``pi_{alpha,n}(B_R(tree) = shape)`` for a ball shape of radius ``R``.

    ``shape`` is a :class:`BallShape`, or a tree/text together with ``radius``
    (defaulting to the shape's height).
    """
    bs = _as_shape(shape, radius)
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    return float(ball_table(alpha, n).vector(bs.shape, bs.radius)[n])


def ball_prob_finite_vector(shape, nmax: int, alpha: float, radius: int | None = None) -> np.ndarray:
    bs = _as_shape(shape, radius)
    return np.array(ball_table(alpha, nmax).vector(bs.shape, bs.radius)[: nmax + 1])


class LimitBalls:
    """Certified brackets for ``pi_alpha^{(R)}`` at truncation ``M``."""

    def __init__(self, alpha: float, truncation: int = DEFAULT_TRUNCATION):
        self.alpha = check_alpha(alpha, positive=True)
        if truncation < 1:
            raise ValueError(f"truncation must be >= 1, got {truncation}")
        self.M = truncation
        self.table = ball_table(alpha, truncation)
        self._pmf = mu_size_pmf_array(truncation, alpha)
        self._tail = mu_size_tail(truncation, alpha)
        self._spine: dict[tuple[str, int], IntervalEstimate] = {}
        self._side: dict[tuple[str, int], IntervalEstimate] = {}

    def spine(self, shape: PlanarTree, radius: int) -> IntervalEstimate:
        """Bracket for the limit probability that the radius-``radius`` ball is ``shape``."""
        key = (shape.code, radius)
        hit = self._spine.get(key)
        if hit is not None:
            return hit
        if radius == 1:
            out = IntervalEstimate.exact(1.0 if shape.is_leaf else 0.0)
        elif shape.height < radius:
            # the spine is infinite, so limit balls have full height
            out = IntervalEstimate.exact(0.0)
        else:
            left, right = shape.left, shape.right
            r = radius - 1
            via_left = self.spine(left, r) * self.outgrowth(right, r)
            via_right = self.spine(right, r) * self.outgrowth(left, r)
            out = (via_left + via_right).scale(0.5).clip()
        self._spine[key] = out
        return out

    def outgrowth(self, shape: PlanarTree, radius: int) -> IntervalEstimate:
        """Bracket for ``mu_alpha(B_radius(tree) = shape)``."""
        key = (shape.code, radius)
        hit = self._side.get(key)
        if hit is not None:
            return hit
        if shape.height < radius:
            out = IntervalEstimate.exact(mu_mass(shape, self.alpha))
        else:
            if shape.leaf_count > self.M:
                raise ValueError(
                    f"truncation {self.M} is below the sub-shape leaf count {shape.leaf_count}"
                )
            p = self.table.vector(shape, radius)[: self.M + 1]
            s = float(np.cumsum(self._pmf * p)[-1])
            out = IntervalEstimate(max(s - _PAD, 0.0), min(s + self._tail + _PAD, 1.0))
        self._side[key] = out
        return out


def ball_prob_limit(shape, alpha: float, truncation: int = DEFAULT_TRUNCATION,
                    radius: int | None = None) -> IntervalEstimate:
    """Bracket ``[lower, upper]`` for the limiting probability of a ball shape."""
    check_alpha(alpha, positive=True)
    bs = _as_shape(shape, radius)
    if not bs.shape.is_leaf:
        need = max(bs.shape.left.leaf_count, bs.shape.right.leaf_count)
        if truncation < need:
            raise ValueError(
                f"truncation {truncation} is below the largest sub-shape leaf count {need}"
            )
    return LimitBalls(alpha, truncation).spine(bs.shape, bs.radius)


# sampling


@njit
def _outgrowth_size(alpha, v, cap):
    # smallest m with P(size > m) < v, walking the tail by its ratio (m - alpha)/m
    m = 1
    tail = 1.0 - alpha
    while tail >= v:
        if cap > 0 and m >= cap:
            return cap, True
        m += 1
        tail *= (m - alpha) / m
    return m, False


def sample_outgrowth_size(alpha: float, rng: np.random.Generator, cap: int | None = None) -> tuple[int, bool]:
    """Outgrowth leaf count by sequential inversion; ``(size, capped)``."""
    check_alpha(alpha, positive=True)
    v = 1.0 - rng.random()
    m, capped = _outgrowth_size(alpha, v, 0 if cap is None else int(cap))
    return int(m), bool(capped)


def sample_outgrowth_with_info(alpha: float, rng: np.random.Generator,
                               cap: int | None = None) -> tuple[PlanarTree, bool]:
    m, capped = sample_outgrowth_size(alpha, rng, cap)
    if m == 1:
        return LEAF, capped
    return grow(m, alpha, rng).to_planar(), capped


def sample_outgrowth(alpha: float, rng, cap: int | None = None) -> PlanarTree:
    """A tree drawn from ``mu_alpha``: size by inversion, then shape by growth.

    With ``cap`` set, sizes beyond it are cut to ``cap`` leaves; use
    :func:`sample_outgrowth_with_info` to see whether that happened.
    """
    if not isinstance(rng, np.random.Generator):
        rng = make_rng(int(rng), "outgrowth")
    return sample_outgrowth_with_info(alpha, rng, cap)[0]


@dataclass
class SpineEnvironment:
    """A lazily extended sample of the limit measure.

    ``sides[k-1]`` is True when the outgrowth of spine vertex ``k`` hangs to
    the left of the spine. ``capped`` lists the spine vertices whose outgrowth
    size hit the cap.
    """

    alpha: float
    seed: int
    index: int = 0
    cap: int | None = None
    sides: list[bool] = field(default_factory=list)
    outgrowths: list[PlanarTree] = field(default_factory=list)
    capped: list[int] = field(default_factory=list)
    _rng: np.random.Generator | None = field(default=None, repr=False)

    @property
    def generated_depth(self) -> int:
        return len(self.outgrowths)

    def extend(self, depth: int) -> "SpineEnvironment":
        if self._rng is None:
            self._rng = make_rng(self.seed, "environment", self.index)
        while len(self.outgrowths) < depth:
            # per vertex: side, size, then the growth stream of the outgrowth
            self.sides.append(bool(self._rng.random() < 0.5))
            tree, was_capped = sample_outgrowth_with_info(self.alpha, self._rng, self.cap)
            self.outgrowths.append(tree)
            if was_capped:
                self.capped.append(len(self.outgrowths))
        return self

    def ball_code(self, radius: int) -> str:
        if radius < 1:
            raise ValueError(f"radius must be >= 1, got {radius}")
        if self.generated_depth < radius - 1:
            raise ValueError(
                f"environment generated to depth {self.generated_depth}, "
                f"radius {radius} needs {radius - 1}"
            )
        head: list[str] = []
        tail: list[str] = []
        for k in range(1, radius):
            og = ball_code(self.outgrowths[k - 1], radius - k)
            if self.sides[k - 1]:
                head.append("(" + og)
                tail.append(")")
            else:
                head.append("(")
                tail.append(og + ")")
        return "".join(head) + "o" + "".join(reversed(tail))

    def ball_volumes(self, rmax: int) -> np.ndarray:
        """``V_R`` (edges in the radius-R ball) for ``R = 0..rmax``; entry 0 is 0."""
        if self.generated_depth < rmax - 1:
            raise ValueError("environment too shallow for the requested radius")
        vol = np.zeros(rmax + 1, dtype=np.int64)
        vol[1:] = np.arange(1, rmax + 1)
        for k in range(1, rmax):
            cum = np.cumsum(np.bincount(self.outgrowths[k - 1].vertex_depths, minlength=rmax + 1))
            r = np.arange(1, rmax - k + 1)
            vol[k + 1 :] += cum[np.minimum(r, cum.shape[0] - 1)]
        return vol


def sample_environment(alpha: float, depth: int, seed: int, index: int = 0,
                       cap: int | None = None) -> SpineEnvironment:
    """Spine vertices ``1..depth``, each with a fair side and a ``mu_alpha`` outgrowth."""
    check_alpha(alpha, positive=True)
    if depth < 1:
        raise ValueError(f"need depth >= 1, got {depth}")
    return SpineEnvironment(alpha, seed, index, cap).extend(depth)


def environment_ball(env: SpineEnvironment, radius: int) -> BallShape:
    return BallShape(PlanarTree(env.ball_code(radius)), radius)
