"""Exact ground truth on small instances, independent of the simulators.

The enumeration oracle walks every trajectory of a finite-support random
walk, so probabilities, restricted expectations, and certified achieving
constants come from exhaustive summation rather than sampling.  The
branching oracles iterate the offspring generating function and its pmf
convolutions; the GBM oracle is the closed-form supremum law of drifted
Brownian motion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import CapTooSmall, NonPositiveA, PositiveDrift, ThresholdBelowStart, TooManyPaths
from .simulators import GbmSpec, OffspringLaw, RandomWalkSpec

__all__ = [
    "EnumerationResult",
    "EnumerationTable",
    "build_enumeration",
    "enumerate_walk",
    "pgf_iterate",
    "gw_exact_pmf",
    "gbm_sup_prob_exact",
]

DEFAULT_PATH_CAP = 10**7


@dataclass(frozen=True)
class EnumerationResult:
    """Exact Theorem-A quantities for one walk instance and one threshold.

    ``certified_a`` is the Theorem-A constant (terminal comparisons:
    min over prefixes of E(X_N | prefix) / X_n for n < N) and
    ``certified_a_step`` the stepwise achieving constant
    (min of E(X_{n+1} | prefix) / X_n).  They differ in general and feed
    different checks.
    """

    p_max_ge_alpha: float
    restricted_exp: float
    terminal_exp: float
    certified_a: float
    certified_a_step: float


class EnumerationTable:
    """All leaves of the path tree of a finite walk, ready for threshold queries.

    Build once, query many alphas: the leaf table (probability, terminal X,
    running max of X) is threshold-independent, as are the certified
    constants.
    """

    def __init__(
        self,
        spec: RandomWalkSpec,
        transform: Callable[[float], float] = math.exp,
        exact: bool = False,
        max_paths: int = DEFAULT_PATH_CAP,
    ):
        n_leaves = 1
        for law in spec.steps:
            n_leaves *= len(law.support)
        if n_leaves > max_paths:
            raise TooManyPaths(f"{n_leaves} paths exceed the cap {max_paths}")
        self.spec = spec
        self.transform = transform
        self.exact = exact
        self._probs: list = []
        self._x_term: list[float] = []
        self._x_max: list[float] = []
        self._ratios_term: list[float] = []
        self._ratios_step: list[float] = []

        n = spec.n_steps
        steps = spec.steps
        one = Fraction(1) if exact else 1.0

        def visit(depth: int, s: float, prob, x_running_max: float, x_here: float) -> float:
            """Depth-first sweep; returns E(X_N | this prefix)."""
            if depth == n:
                self._probs.append(prob)
                self._x_term.append(x_here)
                self._x_max.append(x_running_max)
                return x_here
            law = steps[depth]
            e_term = 0.0
            e_next = 0.0
            for y, p in zip(law.support, law.probs):
                pf = Fraction(p) if exact else p
                s_child = s + y
                x_child = transform(s_child)
                e_term += p * visit(
                    depth + 1, s_child, prob * pf, max(x_running_max, x_child), x_child
                )
                e_next += p * x_child
            if x_here > 0:
                self._ratios_term.append(e_term / x_here)
                self._ratios_step.append(e_next / x_here)
            return e_term

        x0 = transform(spec.start)
        visit(0, spec.start, one, x0, x0)

        if n > 0 and not self._ratios_term:
            raise NonPositiveA("no prefix had a positive value; cannot certify a constant")
        self.certified_a = min(self._ratios_term) if self._ratios_term else math.inf
        self.certified_a_step = min(self._ratios_step) if self._ratios_step else math.inf
        self._probs_float = np.array([float(p) for p in self._probs])
        self._x_term_arr = np.array(self._x_term)
        self._x_max_arr = np.array(self._x_max)

    def terminal_exp(self) -> float:
        return math.fsum(self._probs_float * self._x_term_arr)

    def at(self, alpha: float) -> EnumerationResult:
        """Exact quantities at one threshold (weak inequality, max X >= alpha)."""
        hit = self._x_max_arr >= alpha
        if self.exact:
            p = float(sum(pr for pr, h in zip(self._probs, hit) if h))
        else:
            p = math.fsum(self._probs_float[hit])
        restricted = math.fsum(self._probs_float[hit] * self._x_term_arr[hit])
        return EnumerationResult(
            p_max_ge_alpha=p,
            restricted_exp=restricted,
            terminal_exp=self.terminal_exp(),
            certified_a=self.certified_a,
            certified_a_step=self.certified_a_step,
        )

    def lp_norms(self, p: float) -> tuple[float, float]:
        """(||max X||_p, ||X_N||_p), exact moments of the leaf table."""
        if not p > 1:
            raise ValueError("p must exceed 1")
        norm_max = math.fsum(self._probs_float * self._x_max_arr**p) ** (1.0 / p)
        norm_term = math.fsum(self._probs_float * np.abs(self._x_term_arr) ** p) ** (1.0 / p)
        return norm_max, norm_term


def build_enumeration(
    spec: RandomWalkSpec,
    transform: Callable[[float], float] = math.exp,
    exact: bool = False,
    max_paths: int = DEFAULT_PATH_CAP,
) -> EnumerationTable:
    return EnumerationTable(spec, transform, exact, max_paths)


def enumerate_walk(
    spec: RandomWalkSpec,
    transform: Callable[[float], float],
    alpha: float,
    exact: bool = False,
    max_paths: int = DEFAULT_PATH_CAP,
) -> EnumerationResult:
    """Exhaustive enumeration of X = transform(S) over all |support|^N paths.

    ``exact=True`` carries path probabilities as rationals (the gold-standard
    mode for small N); the default keeps them in floats and compensates the
    final sums.
    """
    return EnumerationTable(spec, transform, exact, max_paths).at(alpha)


def pgf_iterate(offspring: OffspringLaw, n: int, z: float) -> float:
    """The n-th iterate h(h(...h(z)...)) of the offspring generating function.

    This is the generating function of the n-th generation size started from
    one ancestor; n = 0 returns z itself.
    """
    if not 0.0 <= z <= 1.0:
        raise ValueError("z must lie in [0, 1]")
    if n < 0:
        raise ValueError("n must be nonnegative")
    value = float(z)
    for _ in range(n):
        value = min(1.0, max(0.0, offspring.pgf(value)))
    return value


def gw_exact_pmf(
    offspring: OffspringLaw, n: int, cap: int, overflow_tol: float = 1e-9
) -> tuple[np.ndarray, float]:
    """Exact law of the n-th generation size on {0..cap}, plus escaped mass.

    Transition pmf's are j-fold convolutions of the offspring law, truncated
    at ``cap``; whatever mass ever crosses the cap is reported as overflow.
    Raises :class:`CapTooSmall` when the overflow exceeds ``overflow_tol``.
    This route is independent of :func:`pgf_iterate` and cross-checks it via
    sum_j pmf[j] z^j.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if cap < max(1, offspring.max_offspring):
        raise ValueError("cap must be at least max(1, offspring support bound)")
    size = cap + 1
    base = np.zeros(size)
    base[: offspring.max_offspring + 1] = offspring.pmf
    # transition[j] = law of the total offspring of j parents, truncated
    transition = np.zeros((size, size))
    transition[0, 0] = 1.0
    for j in range(1, size):
        transition[j] = np.convolve(transition[j - 1], base)[:size]
    dist = np.zeros(size)
    dist[1] = 1.0
    for _ in range(n):
        dist = dist @ transition
    overflow = 1.0 - float(dist.sum())
    overflow = max(overflow, 0.0)
    if overflow > overflow_tol:
        raise CapTooSmall(f"{overflow:.3e} of the mass escaped beyond {cap}")
    return dist, overflow


def gbm_sup_prob_exact(spec: GbmSpec, alpha: float) -> float:
    """P(sup over all t of S_t >= alpha) = (z/alpha)^(1 - 2 mu / sigma^2).

    The log-price is Brownian motion with drift mu - sigma^2/2 < 0, whose
    all-time supremum is exponential; negative drift is required for the
    supremum to be finite.  The exponent is >= 1, so this never exceeds the
    z/alpha bound.
    """
    if spec.mu >= 0:
        raise PositiveDrift("the all-time supremum law needs mu < 0")
    if not alpha > spec.z:
        raise ThresholdBelowStart(f"alpha = {alpha!r} must exceed the start value {spec.z!r}")
    exponent = 1.0 - 2.0 * spec.mu / spec.sigma**2
    return (spec.z / alpha) ** exponent
