"""Closed-form right-hand sides of the maximal inequalities.

Every function here is a pure formula: expectations arrive as plain numbers
(exact values from an oracle or Monte Carlo point estimates), so one
implementation serves both verification routes.  A right-hand side of +inf
is legitimate (the inequalities stay valid in the broader sense) and is
flagged VACUOUS downstream instead of being treated as a pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    BadExponent,
    NonPositiveA,
    NonPositiveAlpha,
    ThresholdBelowStart,
)

__all__ = [
    "THEOREM_IDS",
    "BoundReport",
    "a_tilde",
    "improved_doob_rhs",
    "lp_bound",
    "time_series_rhs",
    "slope_rhs",
    "indep_incr_a",
    "rw_corollary_rhs",
    "levy_rhs",
    "branching_rhs",
    "csbp_rhs",
    "gbm_sup_bound",
]

#: Stable identifiers used in reports and CSV output.
THEOREM_IDS = (
    "A",
    "B",
    "T1_time_series",
    "T2_slope",
    "T3_indep_incr",
    "COR_rw",
    "T4_levy",
    "T5_branching",
    "CSBP",
    "GBM",
    "LP",
)


@dataclass(frozen=True)
class BoundReport:
    """One theorem applied to one instance: both sides and the verdict."""

    theorem_id: str
    alpha: float
    a: float
    a_tilde: float
    lhs: float
    rhs: float
    verdict: str

    def __post_init__(self):
        if self.a_tilde != min(self.a, 1.0):
            raise ValueError("a_tilde must equal min(a, 1)")
        if not (self.rhs >= 0 or math.isnan(self.rhs)):
            raise ValueError("rhs must be nonnegative (or +inf)")

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


def a_tilde(a: float) -> float:
    """The constant entering the improved bound: min(a, 1)."""
    if not a > 0:
        raise NonPositiveA(f"a must be positive, got {a!r}")
    return min(float(a), 1.0)


def improved_doob_rhs(alpha: float, a: float, restricted_exp: float) -> float:
    """restricted_exp / (alpha * min(a, 1)): the improved Doob right-hand side.

    With a >= 1 this is the classical Doob bound; with a < 1 it is the only
    bound available, at the price of the 1/a factor.
    """
    if not alpha > 0:
        raise NonPositiveAlpha(f"alpha must be positive, got {alpha!r}")
    if restricted_exp < 0:
        raise ValueError("the restricted expectation must be nonnegative")
    return restricted_exp / (alpha * a_tilde(a))


def lp_bound(p: float, a: float, norm_terminal: float) -> float:
    """Moment bound for the running maximum: (1/a~) * p/(p-1) * ||X_N||_p."""
    if not p > 1:
        raise BadExponent(f"p must exceed 1, got {p!r}")
    if norm_terminal < 0:
        raise ValueError("the terminal norm must be nonnegative")
    return (1.0 / a_tilde(a)) * (p / (p - 1.0)) * norm_terminal


def time_series_rhs(alpha: float, ell: float, n_steps: int, restricted_exp_exp_s: float) -> float:
    """Right side for a walk whose jumps exceed ell < 0: e^{-alpha+|ell|N} E[e^{S_N}; max >= alpha].

    Implemented literally as the reduction that proves it, with threshold
    e^alpha and constant e^{ell N}, so the identity with
    :func:`improved_doob_rhs` holds bitwise, not just up to rounding.
    """
    if not ell < 0:
        raise ValueError("ell must be strictly negative")
    if n_steps < 0:
        raise ValueError("the step count must be nonnegative")
    return improved_doob_rhs(math.exp(alpha), math.exp(ell * n_steps), restricted_exp_exp_s)


def slope_rhs(alpha: float, ell: float, horizon: float, restricted_exp_exp_y: float) -> float:
    """Continuous analogue of :func:`time_series_rhs` for slopes above ell."""
    if not ell < 0:
        raise ValueError("ell must be strictly negative")
    if not horizon > 0:
        raise ValueError("the horizon must be positive")
    return improved_doob_rhs(math.exp(alpha), math.exp(ell * horizon), restricted_exp_exp_y)


def indep_incr_a(increment_mgfs: Sequence[float]) -> float:
    """inf over grid times s of E e^{Z_T - Z_s}; the s = T term pins it at <= 1."""
    arr = np.asarray(increment_mgfs, dtype=float)
    if arr.size == 0:
        raise ValueError("need at least the s = T entry")
    if not np.any(arr == 1.0):
        raise ValueError("the sequence must include the s = T term, which is exactly 1")
    a = float(arr.min())
    if not a > 0:
        raise NonPositiveA(f"infimum of increment MGFs is {a!r}")
    return a


def rw_corollary_rhs(alpha: float, pi: Sequence[float], restricted_exp_exp_sn: float) -> float:
    """e^{-alpha} * max_n pi_n^{-1} * E[e^{S_N}; max S_n >= alpha]."""
    arr = np.asarray(pi, dtype=float)
    if not np.all(arr > 0):
        raise NonPositiveA("all tail products pi_n must be positive")
    if restricted_exp_exp_sn < 0:
        raise ValueError("the restricted expectation must be nonnegative")
    return math.exp(-alpha) * float((1.0 / arr).max()) * restricted_exp_exp_sn


def levy_rhs(
    alpha: float, gamma: float, horizon: float, restricted_exp_exp_zt: float
) -> tuple[float, float]:
    """Both Levy bounds on P(sup Z >= alpha).

    bound1 uses the restricted expectation, e^{-alpha} E[e^{Z_T}; .] / min(1, gamma^T);
    bound2 is the expectation-free form e^{-alpha} max(1, gamma^T).  Estimated
    with different inputs, neither dominates the other numerically, so both
    are reported.
    """
    if not gamma > 0:
        raise NonPositiveA(f"gamma must be positive, got {gamma!r}")
    if not horizon > 0:
        raise ValueError("the horizon must be positive")
    if restricted_exp_exp_zt < 0:
        raise ValueError("the restricted expectation must be nonnegative")
    gamma_t = gamma ** float(horizon)
    bound1 = math.exp(-alpha) * restricted_exp_exp_zt / min(1.0, gamma_t)
    bound2 = math.exp(-alpha) * max(1.0, gamma_t)
    return bound1, bound2


def branching_rhs(
    alpha: float, clock_rate: float, mu: float, horizon: float, restricted_exp_zt: float
) -> tuple[float, float]:
    """Subcritical-branching bound and its universal cap.

    Returns (alpha^{-1} e^{-b m T} E[Z_T; sup >= alpha], alpha^{-1}) with
    m = mu - 1.  With exact expectations the first is below the cap; with
    noisy plug-ins it may not be, and no clamping is applied.
    """
    if not alpha > 0:
        raise NonPositiveAlpha(f"alpha must be positive, got {alpha!r}")
    if not 0 < mu < 1:
        raise ValueError("the mean offspring number must lie in (0, 1)")
    if not clock_rate > 0:
        raise ValueError("the clock rate must be positive")
    if restricted_exp_zt < 0:
        raise ValueError("the restricted expectation must be nonnegative")
    m = mu - 1.0
    rhs = math.exp(-clock_rate * m * float(horizon)) * restricted_exp_zt / alpha
    return rhs, 1.0 / alpha


def csbp_rhs(alpha: float, beta: float, horizon: float, restricted_exp_xt: float) -> float:
    """alpha^{-1} e^{-beta T} E[X_T; sup X >= alpha] for the quadratic-mechanism CSBP."""
    if not alpha > 0:
        raise NonPositiveAlpha(f"alpha must be positive, got {alpha!r}")
    if not beta < 0:
        raise ValueError("beta must be strictly negative")
    if not horizon > 0:
        raise ValueError("the horizon must be positive")
    if restricted_exp_xt < 0:
        raise ValueError("the restricted expectation must be nonnegative")
    return math.exp(-beta * float(horizon)) * restricted_exp_xt / alpha


def gbm_sup_bound(z: float, alpha: float) -> float:
    """z / alpha: the all-time supremum bound for GBM with negative drift."""
    if not z > 0:
        raise ValueError("the start value must be positive")
    if not alpha > z:
        raise ThresholdBelowStart(
            f"alpha = {alpha!r} must exceed the start z = {z!r} (otherwise the probability is 1)"
        )
    return z / alpha
