"""Hausdorff and spectral dimension estimates on sampled spine environments.

Return probabilities are computed per environment by propagating the exact
occupation vector of the simple random walk. The walk runs on the radius-``Rb``
ball of the environment with the vertices at distance ``Rb`` made absorbing.
Mass absorbed at time ``s`` could only come back to the root at times
``t >= s + Rb``, so the absorbed mass up to ``t - Rb`` bounds the error at
time ``t``. With ``Rb > tmax / 2`` the result is exact. Otherwise ``Rb`` is
doubled until that bound is below a relative tolerance.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._accel import HAS_NUMBA, njit
from .exact import check_alpha
from .growth import grow
from .limit import SpineEnvironment, sample_environment
from .rng import make_rng
from .tree import PlanarTree, to_arrays

DEFAULT_CAP = 10**6
DEFAULT_LEAK_TOL = 1e-6
INITIAL_DP_RADIUS = 64
# vertices of a walk ball; about 40 bytes each across the DP arrays
MAX_BALL_VERTICES = 50_000_000


def default_workers() -> int:
    return max(1, int(os.environ.get("ALPHATREE_THREADS", "1")))


def _map(fn, items, workers: int | None):
    # order-preserving, so reductions below are deterministic
    workers = default_workers() if workers is None else workers
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, items))


@dataclass
class ScalingFit:
    """Least-squares line through ``(log x, log y)`` on a contiguous window."""

    log_x: np.ndarray
    log_y: np.ndarray
    slope: float
    slope_stderr: float
    intercept: float
    window: tuple[float, float]
    dimension: float
    dimension_stderr: float

    def as_dict(self) -> dict:
        return {
            "slope": self.slope,
            "slope_stderr": self.slope_stderr,
            "intercept": self.intercept,
            "window": list(self.window),
            "dimension": self.dimension,
            "dimension_stderr": self.dimension_stderr,
            "points": int(self.log_x.size),
        }


def fit_power_law(x, y, window: tuple[float, float] | None = None, *,
                  min_points: int = 6, scale: float = 1.0) -> ScalingFit:
    """Slope of ``log y`` against ``log x`` over ``window`` (inclusive bounds in x).

    ``scale`` maps the slope to the reported dimension (e.g. ``-2`` for the
    spectral dimension).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if window is None:
        window = (float(x.min()), float(x.max()))
    lo, hi = window
    sel = (x >= lo) & (x <= hi) & (y > 0)
    if sel.sum() < min_points:
        raise ValueError(
            f"degenerate fit window [{lo}, {hi}]: {int(sel.sum())} usable points, need {min_points}"
        )
    lx, ly = np.log(x[sel]), np.log(y[sel])
    xm = lx.mean()
    sxx = float(((lx - xm) ** 2).sum())
    if sxx == 0:
        raise ValueError("degenerate fit window: all abscissae equal")
    slope = float(((lx - xm) * (ly - ly.mean())).sum() / sxx)
    intercept = float(ly.mean() - slope * xm)
    resid = ly - (intercept + slope * lx)
    dof = lx.size - 2
    stderr = float(math.sqrt((resid @ resid) / dof / sxx)) if dof > 0 else 0.0
    return ScalingFit(lx, ly, slope, stderr, intercept, (float(lo), float(hi)),
                      scale * slope, abs(scale) * stderr)


# ball volumes


@dataclass
class VolumeCurve:
    radii: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    environments: int
    capped_draws: int
    alpha: float
    seed: int


def _env_volumes(alpha, rmax, seed, index, cap):
    env = sample_environment(alpha, max(rmax - 1, 1), seed, index, cap)
    return env.ball_volumes(rmax)[1:], len(env.capped)


def ball_volume_curve(alpha: float, rmax: int, samples: int, seed: int, *,
                      cap: int | None = DEFAULT_CAP, workers: int | None = None) -> VolumeCurve:
    """Mean edge count of the radius-R ball of the limit tree, ``R = 1..rmax``."""
    check_alpha(alpha, positive=True)
    rows = _map(lambda i: _env_volumes(alpha, rmax, seed, i, cap), range(samples), workers)
    vols = np.array([r[0] for r in rows], dtype=np.float64)
    capped = sum(r[1] for r in rows)
    sd = vols.std(axis=0, ddof=1) if samples > 1 else np.zeros(rmax)
    return VolumeCurve(np.arange(1, rmax + 1), vols.mean(axis=0), sd / math.sqrt(samples),
                       samples, capped, alpha, seed)


def hausdorff_estimate(curve: VolumeCurve, window: tuple[float, float] | None = None) -> ScalingFit:
    """Exponent of ``<V_R> ~ R^d``; default window is the upper half of the radii."""
    rmax = int(curve.radii.max())
    if window is None:
        window = (rmax / 2, rmax)
    return fit_power_law(curve.radii, curve.mean, window)


# random walk return probabilities


@dataclass
class WalkGraph:
    """A ball laid out in order of depth, root first."""

    parent: np.ndarray
    degree: np.ndarray
    depth: np.ndarray
    radius: int
    active: np.ndarray  # active[d] = number of vertices at depth <= d

    @property
    def size(self) -> int:
        return self.parent.shape[0]


def walk_graph(ball: PlanarTree, radius: int, max_vertices: int = MAX_BALL_VERTICES) -> WalkGraph:
    """Depth-ordered arrays for the walk; vertices at depth ``radius`` absorb."""
    if len(ball.code) > max_vertices:
        raise MemoryError(
            f"radius-{radius} ball has {len(ball.code)} vertices, above the guard {max_vertices}"
        )
    parent, depth, leaf = to_arrays(ball)
    order = np.argsort(depth, kind="stable")
    relabel = np.empty_like(order)
    relabel[order] = np.arange(order.size)
    par = parent[order]
    par = np.where(par >= 0, relabel[np.maximum(par, 0)], -1)
    depth = depth[order]
    leaf = leaf[order]
    degree = np.where(leaf, 1.0, 3.0)
    degree[0] = 1.0
    degree[depth >= radius] = 1.0
    active = np.searchsorted(depth, np.arange(radius + 1), side="right")
    return WalkGraph(par, degree, depth, radius, active)


@njit
def _propagate_numba(parent, degree, active, radius, tmax):
    n = parent.shape[0]
    cur = np.zeros(n)
    nxt = np.zeros(n)
    cur[0] = 1.0
    ret = np.zeros(tmax + 1)
    leak = np.zeros(tmax + 1)
    ret[0] = 1.0
    inner = active[radius - 1] if radius >= 1 else 1
    for t in range(1, tmax + 1):
        m = active[min(t, radius)]
        for v in range(m):
            nxt[v] = 0.0
        for v in range(1, m):
            u = parent[v]
            nxt[u] += cur[v] / degree[v]
            nxt[v] += cur[u] / degree[u]
        if t >= radius:
            s = 0.0
            for v in range(inner, m):
                s += nxt[v]
                nxt[v] = 0.0
            leak[t] = s
        ret[t] = nxt[0]
        cur, nxt = nxt, cur
    return ret, leak


def _propagate_numpy(parent, degree, active, radius, tmax):
    n = parent.shape[0]
    cur = np.zeros(n)
    cur[0] = 1.0
    ret = np.zeros(tmax + 1)
    leak = np.zeros(tmax + 1)
    ret[0] = 1.0
    inner = active[radius - 1]
    for t in range(1, tmax + 1):
        m = active[min(t, radius)]
        par = parent[1:m]
        w = cur[:m] / degree[:m]
        nxt = np.bincount(par, weights=w[1:m], minlength=m)
        nxt[1:m] += w[par]
        if t >= radius:
            leak[t] = nxt[inner:m].sum()
            nxt[inner:m] = 0.0
        ret[t] = nxt[0]
        cur = np.zeros(n)
        cur[:m] = nxt
    return ret, leak


_propagate = _propagate_numba if HAS_NUMBA else _propagate_numpy


@dataclass
class ReturnCurve:
    """Per-environment return probabilities with a certified truncation bound."""

    p: np.ndarray
    error_bound: np.ndarray
    radius: int
    ball_size: int
    capped_draws: int


def exact_return_probabilities(graph: WalkGraph, tmax: int) -> tuple[np.ndarray, np.ndarray]:
    """``p(t)`` for ``t = 0..tmax`` and an upper bound on its truncation error."""
    ret, leak = _propagate(graph.parent, graph.degree, graph.active, graph.radius, tmax)
    absorbed = np.cumsum(leak)
    bound = np.zeros(tmax + 1)
    r = graph.radius
    if tmax >= r:
        bound[r:] = absorbed[: tmax + 1 - r]
    return ret, bound


def environment_return_curve(env: SpineEnvironment, tmax: int, *, radius: int | None = None,
                             leak_tol: float = DEFAULT_LEAK_TOL,
                             tmin_check: int | None = None) -> ReturnCurve:
    """Exact-DP return curve of one environment, enlarging the ball until the
    truncation bound is below ``leak_tol`` relative to ``p(t)`` for even
    ``t >= tmin_check`` (default ``tmax / 10``)."""
    exact_radius = tmax // 2 + 1
    rb = exact_radius if radius is None else min(radius, exact_radius)
    adaptive = radius is None
    if adaptive:
        rb = min(INITIAL_DP_RADIUS, exact_radius)
    t0 = tmax // 10 if tmin_check is None else tmin_check
    while True:
        env.extend(rb - 1)
        graph = walk_graph(PlanarTree(env.ball_code(rb)), rb)
        p, bound = exact_return_probabilities(graph, tmax)
        if not adaptive or rb >= exact_radius:
            break
        t = np.arange(tmax + 1)
        sel = (t >= max(t0, 2)) & (t % 2 == 0)
        if np.all(bound[sel] <= leak_tol * p[sel]):
            break
        rb = min(2 * rb, exact_radius)
    if rb >= exact_radius:
        bound = np.zeros_like(bound)
    return ReturnCurve(p, bound, rb, graph.size, len(env.capped))


@njit
def _walkers_numba(nbr_ptr, nbr, absorbing, u, tmax):
    walkers = u.shape[0]
    counts = np.zeros(tmax + 1, dtype=np.int64)
    for w in range(walkers):
        pos = 0
        for t in range(1, tmax + 1):
            lo = nbr_ptr[pos]
            deg = nbr_ptr[pos + 1] - lo
            pos = nbr[lo + min(int(u[w, t - 1] * deg), deg - 1)]
            if absorbing[pos]:
                break
            if pos == 0:
                counts[t] += 1
    return counts


def _walkers_numpy(nbr_ptr, nbr, absorbing, u, tmax):
    walkers = u.shape[0]
    counts = np.zeros(tmax + 1, dtype=np.int64)
    pos = np.zeros(walkers, dtype=np.int64)
    alive = np.ones(walkers, dtype=bool)
    for t in range(1, tmax + 1):
        lo = nbr_ptr[pos]
        deg = nbr_ptr[pos + 1] - lo
        step = np.minimum((u[:, t - 1] * deg).astype(np.int64), deg - 1)
        pos = np.where(alive, nbr[lo + step], pos)
        alive &= ~absorbing[pos]
        counts[t] = int(np.count_nonzero(alive & (pos == 0)))
    return counts


_walkers = _walkers_numba if HAS_NUMBA else _walkers_numpy


def walker_return_probabilities(graph: WalkGraph, tmax: int, walkers: int,
                                rng: np.random.Generator) -> np.ndarray:
    """Fraction of ``walkers`` independent walks at the root at each time."""
    n = graph.size
    child = np.arange(1, n)
    ends = np.concatenate([
        np.stack([graph.parent[1:], child], axis=1),
        np.stack([child, graph.parent[1:]], axis=1),
    ])
    ends = ends[np.lexsort((ends[:, 1], ends[:, 0]))]
    nbr_ptr = np.searchsorted(ends[:, 0], np.arange(n + 1))
    nbr = ends[:, 1].copy()
    absorbing = graph.depth >= graph.radius
    u = rng.random((walkers, tmax))
    counts = _walkers(nbr_ptr, nbr, absorbing, u, tmax)
    out = counts / walkers
    out[0] = 1.0
    return out


@dataclass
class ReturnProbabilityCurve:
    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    environments: int
    method: str
    alpha: float
    seed: int
    capped_draws: int = 0
    max_error_bound: float = 0.0
    radii: list[int] = field(default_factory=list)

    def even(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        sel = self.times % 2 == 0
        return self.times[sel], self.mean[sel], self.stderr[sel]


def _env_return_curve(alpha, tmax, seed, index, cap, method, walkers, leak_tol, radius):
    env = SpineEnvironment(alpha, seed, index, cap)
    if method == "exactDP":
        rc = environment_return_curve(env, tmax, radius=radius, leak_tol=leak_tol)
        return rc.p, float(rc.error_bound.max()), rc.radius, len(env.capped)
    rb = tmax // 2 + 1 if radius is None else min(radius, tmax // 2 + 1)
    env.extend(rb - 1)
    graph = walk_graph(PlanarTree(env.ball_code(rb)), rb)
    p = walker_return_probabilities(graph, tmax, walkers, make_rng(seed, "walkers", index))
    return p, 0.0, rb, len(env.capped)


def return_probability_curve(alpha: float, tmax: int, environments: int, seed: int,
                             method: str = "exactDP", *, walkers: int = 1000,
                             cap: int | None = DEFAULT_CAP, leak_tol: float = DEFAULT_LEAK_TOL,
                             radius: int | None = None,
                             workers: int | None = None) -> ReturnProbabilityCurve:
    """Environment-averaged probability that the walk from the root is back at time ``t``.

    ``method`` is ``"exactDP"`` (occupation vector per environment) or
    ``"walkers"`` (``walkers`` independent walks per environment).
    """
    check_alpha(alpha, positive=True)
    if tmax < 2 or tmax % 2:
        raise ValueError(f"tmax must be even and >= 2, got {tmax}")
    if method not in ("exactDP", "walkers"):
        raise ValueError(f"unknown method {method!r}")
    rows = _map(
        lambda i: _env_return_curve(alpha, tmax, seed, i, cap, method, walkers, leak_tol, radius),
        range(environments), workers,
    )
    ps = np.array([r[0] for r in rows])
    sd = ps.std(axis=0, ddof=1) if environments > 1 else np.zeros(tmax + 1)
    return ReturnProbabilityCurve(
        times=np.arange(tmax + 1),
        mean=ps.mean(axis=0),
        stderr=sd / math.sqrt(environments),
        environments=environments,
        method=method,
        alpha=alpha,
        seed=seed,
        capped_draws=sum(r[3] for r in rows),
        max_error_bound=max(r[1] for r in rows),
        radii=[r[2] for r in rows],
    )


def spectral_estimate(curve: ReturnProbabilityCurve,
                      window: tuple[float, float] | None = None) -> ScalingFit:
    """``d_s = -2 * slope`` of ``log <p(t)>`` on even ``t``; default window is the upper decade."""
    t, p, _ = curve.even()
    tmax = int(t.max())
    if window is None:
        window = (tmax / 10, tmax)
    return fit_power_law(t[t > 0], p[t > 0], window, scale=-2.0)


# finite-size scaling


@dataclass
class DepthScaling:
    sizes: np.ndarray
    mean_depth: np.ndarray
    stderr: np.ndarray
    samples: int
    fit: ScalingFit


def _mean_leaf_depth(n, alpha, seed, size_index, sample):
    return grow(n, alpha, make_rng(seed, "finite-scaling", size_index, sample)).mean_leaf_depth()


def finite_size_distance_scaling(alpha: float, sizes, samples_per_size: int, seed: int, *,
                                 window: tuple[float, float] | None = None,
                                 workers: int | None = None) -> DepthScaling:
    """Mean depth of a uniform random leaf in ``grow(n, alpha)`` against ``n``.

    The per-tree average over all leaves is used; it has the same mean as a
    single uniform leaf with less variance.
    """
    check_alpha(alpha, positive=True)
    sizes = np.asarray(sorted(sizes), dtype=np.int64)
    means, errs = [], []
    for si, n in enumerate(sizes):
        d = np.array(_map(lambda s: _mean_leaf_depth(int(n), alpha, seed, si, s),
                          range(samples_per_size), workers))
        means.append(d.mean())
        errs.append(d.std(ddof=1) / math.sqrt(samples_per_size) if samples_per_size > 1 else 0.0)
    means = np.array(means)
    fit = fit_power_law(sizes, means, window, min_points=min(6, sizes.size))
    return DepthScaling(sizes, means, np.array(errs), samples_per_size, fit)
