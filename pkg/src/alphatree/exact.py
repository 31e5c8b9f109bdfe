"""Exact finite-volume probabilities of the alpha model.

Closed forms for the split law ``q_alpha``, the shape law ``pi_{alpha,n}``
through the Markov branching product, the outgrowth law ``mu_alpha`` and its
size marginal, plus a brute-force forward pass over the grafting chain that
serves as an independent oracle for all of them.

Falling products ``Gamma_alpha(n) = (n-1-alpha)...(1-alpha)`` are handled in
the log domain. Every ``Gamma_alpha(m)`` with ``m >= 2`` carries exactly one
factor ``(1 - alpha)``; pulling it out as ``Gamma_alpha(m) = (1-alpha) G(m)``
keeps ``q_alpha`` finite and exact at ``alpha = 1``.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .tree import LEAF_CHAR, CLOSE, PlanarTree, all_trees

DEFAULT_ORACLE_CAP = 9
EXACT_RATIONAL_MAX_N = 12


def check_alpha(alpha: float, *, positive: bool = False) -> float:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if positive and alpha == 0:
        raise ValueError(
            "alpha = 0 is excluded: the limit measure needs 0 < alpha <= 1"
        )
    return alpha


def log_gamma_alpha(n: int, alpha: float) -> float:
    """``log Gamma_alpha(n)``; ``-inf`` encodes an exact zero (alpha = 1, n >= 2)."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if n == 1:
        return 0.0
    if alpha == 1.0:
        return -math.inf
    return math.lgamma(n - alpha) - math.lgamma(1.0 - alpha)


def gamma_alpha(n: int, alpha: float) -> float:
    return math.exp(log_gamma_alpha(n, alpha))


def _log_g(m: int, alpha: float) -> float:
    # log of G(m) = Gamma_alpha(m) / (1 - alpha) for m >= 2; G(1) := 1
    if m == 1:
        return 0.0
    return math.lgamma(m - alpha) - math.lgamma(2.0 - alpha)


def _bracket(n1, n2, alpha):
    """``alpha/2 + (1-2alpha) n1 n2 / (n(n-1))`` as a sum of two nonnegative terms."""
    n = n1 + n2
    return ((1.0 - alpha) * 2 * n1 * n2 + alpha * (n1 * n1 + n2 * n2 - n)) / (2.0 * n * (n - 1))


def q_alpha(n1: int, n2: int, alpha: float) -> float:
    """Probability that the vertex next to the root splits ``n1 + n2`` leaves as (n1, n2)."""
    if n1 < 1 or n2 < 1:
        raise ValueError(f"subtree sizes must be >= 1, got ({n1}, {n2})")
    n = n1 + n2
    if n == 2:
        return 1.0
    c = (n1 >= 2) + (n2 >= 2)
    if alpha == 1.0:
        # only a leaf can split off: q(1, n-1) = q(n-1, 1) = 1/2
        return 0.0 if c == 2 else 0.5
    log_q = (
        math.lgamma(n + 1) - math.lgamma(n1 + 1) - math.lgamma(n2 + 1)
        + _log_g(n1, alpha) + _log_g(n2, alpha) - _log_g(n, alpha)
    )
    if c == 2:
        log_q += math.log1p(-alpha)
    return math.exp(log_q) * _bracket(n1, n2, alpha)


class QTable:
    """Vectorised rows ``q_alpha(k, n-k)`` for ``k = 1..n-1``, ``n <= nmax``."""

    def __init__(self, alpha: float, nmax: int):
        self.alpha = check_alpha(alpha)
        self.nmax = nmax
        k = np.arange(nmax + 1, dtype=np.float64)
        self.log_fact = gammaln(k + 1)
        log_g = gammaln(k - alpha) - gammaln(2.0 - alpha)
        log_g[:2] = 0.0
        self.log_g = log_g
        self._log1m = math.log1p(-alpha) if alpha < 1 else -math.inf

    def row(self, n: int) -> np.ndarray:
        """Array of length ``n + 1`` whose entry ``k`` is ``q(k, n-k)`` (ends are 0)."""
        if n > self.nmax:
            raise ValueError(f"row {n} beyond table size {self.nmax}")
        out = np.zeros(n + 1)
        if n < 2:
            return out
        if n == 2:
            out[1] = 1.0
            return out
        k = np.arange(1, n)
        j = n - k
        c = (k >= 2).astype(np.int64) + (j >= 2)
        log_q = (
            self.log_fact[n] - self.log_fact[k] - self.log_fact[j]
            + self.log_g[k] + self.log_g[j] - self.log_g[n]
        )
        with np.errstate(invalid="ignore"):
            log_q = log_q + np.where(c == 2, self._log1m, 0.0)
        if self.alpha == 1.0:
            out[1] = out[n - 1] = 0.5
            return out
        out[1:n] = np.exp(log_q) * _bracket(k.astype(np.float64), j.astype(np.float64), self.alpha)
        return out


@lru_cache(maxsize=32)
def q_table(alpha: float, nmax: int) -> QTable:
    size = 64
    while size < nmax:
        size *= 2
    return QTable(alpha, size)


# exact rational arithmetic, for separating rounding error from logic error


def _as_fraction(alpha) -> Fraction:
    if isinstance(alpha, Rational):
        return Fraction(alpha)
    if isinstance(alpha, str):
        return Fraction(alpha)
    # shortest decimal that round-trips, so 0.1 means 1/10
    return Fraction(repr(float(alpha)))


def gamma_alpha_exact(n: int, alpha) -> Fraction:
    a = _as_fraction(alpha)
    out = Fraction(1)
    for k in range(1, n):
        out *= k - a
    return out


def q_alpha_exact(n1: int, n2: int, alpha) -> Fraction:
    a = _as_fraction(alpha)
    n = n1 + n2
    if n == 2:
        return Fraction(1)

    def g(m):
        out = Fraction(1)
        for k in range(2, m):
            out *= k - a
        return out

    c = (n1 >= 2) + (n2 >= 2)
    bracket = a / 2 + (1 - 2 * a) * Fraction(n1 * n2, n * (n - 1))
    return math.comb(n, n1) * (1 - a) ** (c - 1) * g(n1) * g(n2) / g(n) * bracket


def exact_pi(
    tree: PlanarTree,
    alpha: float,
    *,
    q: Callable[[int, int, float], float] | None = None,
    exact: bool = False,
):
    """``pi_{alpha,n}(tree)`` by the Markov branching product.

    ``q`` replaces the split law (used by the validation harness for mutation
    tests). With ``exact=True`` the computation runs in rationals and returns
    a :class:`~fractions.Fraction`.
    """
    if exact:
        a = _as_fraction(alpha)
        split = q or q_alpha_exact
        one = Fraction(1)
    else:
        check_alpha(alpha)
        a = alpha
        split = q or q_alpha
        one = 1.0
    stack: list[tuple[int, object]] = []
    for ch in tree.code.encode("ascii"):
        if ch == LEAF_CHAR:
            stack.append((1, one))
        elif ch == CLOSE:
            n2, p2 = stack.pop()
            n1, p1 = stack.pop()
            stack.append((n1 + n2, split(n1, n2, a) * p1 * p2))
    return stack[0][1]


def _subtree_ends(code: str) -> list[tuple[int, int]]:
    """(start, end) spans of every vertex's subtree in the code, preorder."""
    spans: list[list[int]] = []
    open_stack: list[int] = []
    for i, ch in enumerate(code):
        if ch == "o":
            spans.append([i, i + 1])
        elif ch == "(":
            open_stack.append(len(spans))
            spans.append([i, -1])
        else:
            spans[open_stack.pop()][1] = i + 1
    return [(s, e) for s, e in spans]


def growth_chain_distribution(
    n: int, alpha: float, *, cap: int = DEFAULT_ORACLE_CAP, exact: bool = False
) -> dict[str, float]:
    """``pi_{alpha,n}`` by pushing probability through every grafting step.

    Starts from the cherry and, for each tree, grafts onto each of its
    ``2n - 1`` edges with weight ``alpha`` (edge above a branch vertex) or
    ``1 - alpha`` (edge above a leaf) over ``n - alpha``, the new leaf going
    left or right of the old subtree with probability 1/2 each.
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if n > cap:
        shapes = math.comb(2 * (n - 1), n - 1) // n
        raise ValueError(
            f"n = {n} exceeds the oracle cap {cap}: T_n has {shapes} shapes; "
            "raise the cap explicitly to proceed"
        )
    if exact:
        a = _as_fraction(alpha)
        one, half = Fraction(1), Fraction(1, 2)
    else:
        a = check_alpha(alpha)
        one, half = 1.0, 0.5
    if n == 1:
        return {"o": one}
    dist = {"(oo)": one}
    for m in range(2, n):
        w_int = a / (m - a)
        w_leaf = (1 - a) / (m - a)
        nxt: dict[str, object] = {}
        for code, p in dist.items():
            for s, e in _subtree_ends(code):
                w = w_int if code[s] == "(" else w_leaf
                if not w:
                    continue
                sub = code[s:e]
                mass = p * w * half
                for grafted in ("(o" + sub + ")", "(" + sub + "o)"):
                    key = code[:s] + grafted + code[e:]
                    nxt[key] = nxt.get(key, 0) + mass
        dist = nxt
    return dist


def all_exact_pi(n: int, alpha: float, **kw) -> dict[str, float]:
    return {t.code: exact_pi(t, alpha, **kw) for t in all_trees(n)}


# outgrowth law


def mu_mass(tree: PlanarTree, alpha: float) -> float:
    """``mu_alpha(tree) = alpha Gamma_alpha(|tree|) / |tree|! * pi_{alpha,|tree|}(tree)``."""
    return mu_size_pmf(tree.leaf_count, alpha) * exact_pi(tree, alpha)


def log_mu_size_pmf(m: int, alpha: float) -> float:
    check_alpha(alpha, positive=True)
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    return math.log(alpha) + log_gamma_alpha(m, alpha) - math.lgamma(m + 1)


def mu_size_pmf(m: int, alpha: float) -> float:
    """Probability that a ``mu_alpha`` outgrowth has ``m`` leaves."""
    return math.exp(log_mu_size_pmf(m, alpha))


def mu_size_tail(M: int, alpha: float) -> float:
    """``P(size > M)``, in closed form ``Gamma_alpha(M+1) / M!``."""
    check_alpha(alpha, positive=True)
    if M < 0:
        raise ValueError(f"need M >= 0, got {M}")
    if M == 0:
        return 1.0
    if alpha == 1.0:
        return 0.0
    return math.exp(math.lgamma(M + 1 - alpha) - math.lgamma(1 - alpha) - math.lgamma(M + 1))


def mu_size_cdf(M: int, alpha: float) -> float:
    return 1.0 - mu_size_tail(M, alpha)


def mu_size_pmf_array(M: int, alpha: float) -> np.ndarray:
    """Length ``M + 1`` array with ``p(m)`` at index ``m`` (index 0 is 0)."""
    check_alpha(alpha, positive=True)
    out = np.zeros(M + 1)
    if M < 1:
        return out
    m = np.arange(1, M + 1, dtype=np.float64)
    if alpha == 1.0:
        out[1] = 1.0
        return out
    out[1:] = np.exp(math.log(alpha) + gammaln(m - alpha) - gammaln(1 - alpha) - gammaln(m + 1))
    return out


def mu_size_tail_array(M: int, alpha: float) -> np.ndarray:
    """``tail(k)`` for ``k = 0..M``."""
    check_alpha(alpha, positive=True)
    k = np.arange(M + 1, dtype=np.float64)
    if alpha == 1.0:
        out = np.zeros(M + 1)
        out[0] = 1.0
        return out
    return np.exp(gammaln(k + 1 - alpha) - gammaln(1 - alpha) - gammaln(k + 1))
