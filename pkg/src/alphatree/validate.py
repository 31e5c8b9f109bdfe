"""One-shot invariant battery behind ``alphatree validate``.

Every check records its measured value and tolerance; failures are reported,
never raised.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import stats as sps

from .dimensions import (
    ball_volume_curve,
    finite_size_distance_scaling,
    fit_power_law,
    hausdorff_estimate,
    return_probability_curve,
    spectral_estimate,
)
from .exact import (
    exact_pi,
    growth_chain_distribution,
    mu_size_pmf_array,
    mu_size_tail,
    q_alpha,
    q_table,
)
from .growth import grow
from .limit import ball_prob_finite_n, ball_prob_limit, sample_environment
from .rng import make_rng
from .tree import all_shapes, all_trees, ball_code, decode, distance, encode, mirror


@dataclass
class Check:
    name: str
    passed: bool
    value: object
    tolerance: object
    seconds: float = 0.0


@dataclass
class Report:
    level: str
    alpha: float
    seed: int
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {
            "level": self.level,
            "alpha": self.alpha,
            "seed": self.seed,
            "passed": self.passed,
            "checks": [asdict(c) for c in self.checks],
        }


def tampered_q_alpha(n1: int, n2: int, alpha: float) -> float:
    """``q_alpha`` with ``Gamma_alpha(n)`` in the denominator shifted to ``Gamma_alpha(n + 1)``."""
    n = n1 + n2
    if n == 2:
        return 1.0
    return q_alpha(n1, n2, alpha) * (n - 1 - alpha) / (n - alpha)


def _run(report: Report, name: str, fn: Callable[[], tuple[bool, object, object]]) -> None:
    t0 = time.perf_counter()
    try:
        ok, value, tol = fn()
    except Exception as exc:  # a crash is a failed check, not a crashed harness
        ok, value, tol = False, f"{type(exc).__name__}: {exc}", None
    report.checks.append(Check(name, bool(ok), value, tol, time.perf_counter() - t0))


def _q_normalization(alpha, nmax):
    table = q_table(alpha, nmax)
    err = max(abs(table.row(n).sum() - 1.0) for n in range(2, nmax + 1))
    return err <= 1e-10, float(err), 1e-10


def _oracle_equivalence(alpha, nmax, q):
    err = 0.0
    for n in range(1, nmax + 1):
        oracle = growth_chain_distribution(n, alpha)
        for t in all_trees(n):
            err = max(err, abs(exact_pi(t, alpha, q=q) - oracle.get(t.code, 0.0)))
    return err <= 1e-12, err, 1e-12


def _mu_normalization(alpha, M):
    if alpha == 0:
        return True, "skipped at alpha = 0", None
    total = float(mu_size_pmf_array(M, alpha).sum()) + mu_size_tail(M, alpha)
    err = abs(total - 1.0)
    return err <= 1e-10, err, 1e-10


def _ball_brute_force(alpha, rmax, nmax):
    err = 0.0
    for n in range(1, nmax + 1):
        pis = {t.code: exact_pi(t, alpha) for t in all_trees(n)}
        for r in range(1, rmax + 1):
            brute: dict[str, float] = {}
            for code, p in pis.items():
                key = ball_code(decode(code), r)
                brute[key] = brute.get(key, 0.0) + p
            for shape in all_shapes(r):
                got = ball_prob_finite_n(shape, n, alpha, r)
                err = max(err, abs(got - brute.get(shape.code, 0.0)))
    return err <= 1e-12, err, 1e-12


def _limit_brackets_cover_one(alpha, radius):
    if alpha == 0:
        return True, "skipped at alpha = 0", None
    lo = hi = 0.0
    for shape in all_shapes(radius, full_only=True):
        b = ball_prob_limit(shape, alpha, radius=radius)
        lo += b.lower
        hi += b.upper
    return lo <= 1.0 + 1e-12 and hi >= 1.0 - 1e-12, [lo, hi], "lower <= 1 <= upper"


def _tree_roundtrip(seed):
    rng = make_rng(seed, "validate", 0)
    for i in range(20):
        t = grow(int(rng.integers(1, 200)), float(rng.random()), rng).to_planar()
        if decode(encode(t)) != t or mirror(mirror(t)) != t:
            return False, f"round trip failed on sample {i}", "exact"
    trees = [t for n in range(1, 6) for t in all_trees(n)]
    worst = 0
    for a in trees:
        for b in trees:
            for c in trees:
                if distance(a, c) > max(distance(a, b), distance(b, c)):
                    worst += 1
    return worst == 0, worst, "ultrametric violations = 0"


def _sampler_chi2(alpha, seed, samples):
    codes = [t.code for t in all_trees(4)]
    expect = np.array([exact_pi(t, alpha) for t in all_trees(4)])
    counts = dict.fromkeys(codes, 0)
    for i in range(samples):
        counts[grow(4, alpha, make_rng(seed, "validate", 1, i)).to_planar().code] += 1
    obs = np.array([counts[c] for c in codes], dtype=float)
    keep = expect > 0
    if np.any(obs[~keep] > 0):
        return False, "sampled a zero-probability shape", None
    p = float(sps.chisquare(obs[keep], expect[keep] / expect[keep].sum() * samples).pvalue)
    return p > 1e-4, p, "p-value > 1e-4"


def _audit(alpha, seed, n):
    grow(n, alpha, seed).audit()
    return True, n, "audit passes"


def _synthetic_fits():
    x = np.arange(1, 65, dtype=float)
    h = fit_power_law(x, x**2, (32, 64)).dimension
    t = np.arange(2, 4097, 2, dtype=float)
    s = fit_power_law(t, t ** (-2 / 3), (410, 4096), scale=-2).dimension
    err = max(abs(h - 2), abs(s - 4 / 3))
    return err <= 1e-12, err, 1e-12


def _walk_basics(alpha, seed):
    if alpha == 0:
        return True, "skipped at alpha = 0", None
    c = return_probability_curve(alpha, 32, 4, seed)
    ok = c.mean[0] == 1 and np.all(c.mean[1::2] == 0) and abs(c.mean[2] - 1 / 3) < 1e-15
    return ok, [float(c.mean[0]), float(c.mean[1::2].max()), float(c.mean[2])], "p0 = 1, odd = 0, p2 = 1/3"


def _volume_r1(alpha, seed):
    if alpha == 0:
        return True, "skipped at alpha = 0", None
    v = [sample_environment(alpha, 3, seed, i, 10**6).ball_volumes(4)[1] for i in range(50)]
    return all(x == 1 for x in v), int(max(v)), "V_1 = 1"


def _comb_identities(n):
    if not all(abs(q_alpha(1, m - 1, 1.0) - 0.5) == 0 for m in range(3, 40)):
        return False, "q(1, n-1) != 1/2 at alpha = 1", "exact"
    total, mass_off_comb = 0.0, 0.0
    for t in all_trees(n):
        p = exact_pi(t, 1.0)
        total += p
        if t.height != n:
            mass_off_comb += p
    vols = sample_environment(1.0, 31, 0).ball_volumes(32)[1:]
    comb_v = np.array_equal(vols, 2 * np.arange(1, 33) - 1)
    g = grow(1000, 1.0, 0)
    ok = total == 1.0 and mass_off_comb == 0.0 and comb_v and g.height() == 1000
    return ok, {"total": total, "off_comb": mass_off_comb, "V_R": comb_v, "height": g.height()}, "exact"


def _mc_battery(report, alpha, seed):
    if alpha == 0:
        return
    # small-budget versions of the acceptance criteria
    def balls():
        envs = 20_000
        counts: dict[str, int] = {}
        for i in range(envs):
            code = sample_environment(alpha, 2, seed, i, 10**6).ball_code(3)
            counts[code] = counts.get(code, 0) + 1
        worst = 0.0
        for shape in all_shapes(3, full_only=True):
            b = ball_prob_limit(shape, alpha, radius=3)
            f = counts.get(shape.code, 0) / envs
            se = math.sqrt(max(b.midpoint * (1 - b.midpoint), 1e-12) / envs)
            gap = max(b.lower - f, f - b.upper, 0.0) / se
            worst = max(worst, gap)
        return worst <= 3, worst, "outside bracket <= 3 SE"

    def volume():
        fit = hausdorff_estimate(ball_volume_curve(alpha, 64, 200, seed))
        rel = abs(fit.dimension * alpha - 1)
        return rel <= 0.15, fit.dimension, f"1/alpha +- 15% = {1 / alpha:.4g}"

    def depth():
        fit = finite_size_distance_scaling(alpha, [2**k for k in range(8, 15)], 20, seed).fit
        rel = abs(fit.dimension / alpha - 1)
        return rel <= 0.15, fit.dimension, f"alpha +- 15% = {alpha}"

    def spectral():
        fit = spectral_estimate(return_probability_curve(alpha, 1024, 20, seed))
        target = 2 / (1 + alpha)
        return abs(fit.dimension - target) <= 0.15 * target, fit.dimension, f"2/(1+alpha) +- 15% = {target:.4g}"

    _run(report, "limit ball frequencies (radius 3)", balls)
    _run(report, "ball volume slope", volume)
    _run(report, "leaf depth slope", depth)
    _run(report, "spectral dimension", spectral)


def validate(level: str = "quick", alpha: float = 0.5, seed: int = 0, *,
             q: Callable[[int, int, float], float] | None = None) -> Report:
    """Run the invariant suites; ``q`` swaps in a split law for the oracle check."""
    if level not in ("quick", "full"):
        raise ValueError(f"level must be quick or full, got {level!r}")
    full = level == "full"
    report = Report(level, alpha, seed)
    _run(report, "q normalization", lambda: _q_normalization(alpha, 200 if full else 60))
    _run(report, "oracle equivalence", lambda: _oracle_equivalence(alpha, 8 if full else 6, q))
    _run(report, "mu normalization", lambda: _mu_normalization(alpha, 10**4))
    _run(report, "finite ball recursion vs brute force",
         lambda: _ball_brute_force(alpha, 3, 8 if full else 6))
    _run(report, "limit brackets cover 1", lambda: _limit_brackets_cover_one(alpha, 3))
    _run(report, "tree round trip and ultrametric", lambda: _tree_roundtrip(seed))
    _run(report, "growth sampler chi-square (n = 4)",
         lambda: _sampler_chi2(alpha, seed, 20_000 if full else 2_000))
    _run(report, "registry audit", lambda: _audit(alpha, seed, 10**5 if full else 10**4))
    _run(report, "synthetic power-law fits", _synthetic_fits)
    _run(report, "walk basics", lambda: _walk_basics(alpha, seed))
    _run(report, "V_1 = 1", lambda: _volume_r1(alpha, seed))
    if alpha == 1.0:
        _run(report, "comb identities", lambda: _comb_identities(8 if full else 6))
    if full:
        _mc_battery(report, alpha, seed)
    return report
