"""Statistical estimation of both sides of the inequalities, with CI-aware verdicts.

Path generation is chunked into fixed-size blocks, each drawing from its own
child stream of the caller's seed, so estimates are bitwise reproducible and
independent of how many workers process the chunks.  Supremum estimates read
the path on its grid only, which underestimates a continuous supremum; that
one-sided bias is documented, in the inequality's favor, and never
corrected.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .achieving import AchievingCertificate, certify_a
from .core import SeedSpec
from .errors import InsufficientData, UnknownMeanDecay
from .simulators import (
    BranchingSpec,
    CsbpSpec,
    GbmSpec,
    LevyTriple,
    OffspringLaw,
    RandomWalkSpec,
    TimeSeriesSpec,
    levy_gamma,
    sample_branching_batch,
    sample_csbp_batch,
    sample_gbm_batch,
    sample_gw_batch,
    sample_levy_batch,
    sample_time_series_batch,
    sample_walk_batch,
)

__all__ = [
    "CHUNK_SIZE",
    "McEstimate",
    "Verdict",
    "PathStats",
    "path_stats",
    "estimate_sup_tail",
    "estimate_restricted_terminal",
    "verify_inequality",
    "WindowStat",
    "ConvergenceReport",
    "as_convergence_check",
]

CHUNK_SIZE = 4096
Z95 = 1.96


@dataclass(frozen=True)
class McEstimate:
    """A Monte Carlo estimate with its sampling uncertainty."""

    mean: float
    stderr: float
    n: int
    ci95: tuple[float, float]

    @classmethod
    def exact(cls, value: float) -> "McEstimate":
        return cls(mean=float(value), stderr=0.0, n=0, ci95=(float(value), float(value)))

    @classmethod
    def from_samples_moments(cls, total: float, total_sq: float, n: int) -> "McEstimate":
        mean = total / n
        var = max(total_sq / n - mean * mean, 0.0) * (n / max(n - 1, 1))
        stderr = math.sqrt(var / n)
        if not math.isfinite(mean):
            return cls(mean=mean, stderr=math.inf, n=n, ci95=(-math.inf, math.inf))
        return cls(mean=mean, stderr=stderr, n=n, ci95=(mean - Z95 * stderr, mean + Z95 * stderr))

    @classmethod
    def from_proportion(cls, hits: int, n: int) -> "McEstimate":
        """Proportion estimate with a Wilson 95% interval."""
        p_hat = hits / n
        z2 = Z95 * Z95
        denom = 1.0 + z2 / n
        center = (p_hat + z2 / (2.0 * n)) / denom
        half = Z95 * math.sqrt(p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)) / denom
        stderr = math.sqrt(p_hat * (1.0 - p_hat) / n)
        return cls(mean=p_hat, stderr=stderr, n=n, ci95=(max(center - half, 0.0), min(center + half, 1.0)))

    def scale(self, c: float) -> "McEstimate":
        """The estimate of c * quantity, for a nonnegative constant c."""
        if c < 0:
            raise ValueError("scaling constant must be nonnegative")
        return McEstimate(
            mean=c * self.mean,
            stderr=c * self.stderr,
            n=self.n,
            ci95=(c * self.ci95[0], c * self.ci95[1]),
        )


@dataclass(frozen=True)
class Verdict:
    """Outcome of comparing an estimated/exact lhs against a rhs."""

    status: str  # HOLDS_WITH_MARGIN | WITHIN_NOISE | VIOLATED | VACUOUS
    margin_stderr: float


def _as_estimate(value) -> McEstimate:
    if isinstance(value, McEstimate):
        return value
    return McEstimate.exact(float(value))


def verify_inequality(lhs, rhs) -> Verdict:
    """CI-aware comparison: VIOLATED only when the intervals are disjoint the wrong way.

    A +inf right-hand side yields VACUOUS: the bound is honored in the
    broader sense but carries no information, so it is never reported as a
    margin-backed pass.
    """
    le = _as_estimate(lhs)
    re_ = _as_estimate(rhs)
    if math.isinf(re_.mean) and re_.mean > 0 or math.isnan(re_.mean):
        return Verdict(status="VACUOUS", margin_stderr=math.inf)
    combined = math.hypot(le.stderr, re_.stderr)
    diff = re_.mean - le.mean
    if combined > 0:
        margin = diff / combined
    else:
        margin = math.inf if diff > 0 else (-math.inf if diff < 0 else 0.0)
    if le.ci95[0] > re_.ci95[1]:
        return Verdict(status="VIOLATED", margin_stderr=margin)
    if re_.ci95[0] > le.ci95[1]:
        return Verdict(status="HOLDS_WITH_MARGIN", margin_stderr=margin)
    return Verdict(status="WITHIN_NOISE", margin_stderr=margin)


# ---------------------------------------------------------------------------
# Chunked path reduction


def _batch_matrix(spec, horizon, n_dyadic, n_paths, rng, initial) -> np.ndarray:
    if isinstance(spec, RandomWalkSpec):
        return sample_walk_batch(spec, n_paths, rng)
    if isinstance(spec, TimeSeriesSpec):
        return sample_time_series_batch(spec, int(horizon), n_paths, rng)
    if isinstance(spec, LevyTriple):
        return sample_levy_batch(spec, float(horizon), n_dyadic, n_paths, rng)
    if isinstance(spec, BranchingSpec):
        return sample_branching_batch(spec, float(horizon), n_dyadic, n_paths, rng)
    if isinstance(spec, OffspringLaw):
        return sample_gw_batch(spec, int(horizon), initial, n_paths, rng)
    if isinstance(spec, GbmSpec):
        return sample_gbm_batch(spec, float(horizon), n_dyadic, n_paths, rng)
    if isinstance(spec, CsbpSpec):
        return sample_csbp_batch(spec, float(horizon), n_dyadic, n_paths, rng)
    raise TypeError(f"no simulator for {type(spec).__name__}")


@dataclass(frozen=True, eq=False)
class PathStats:
    """Grid running maxima and terminal values of one simulated ensemble.

    Everything the maximal-inequality estimators need is a function of the
    pair (max over grid, terminal value) per path, so only those two
    reductions are kept.
    """

    maxima: np.ndarray
    terminals: np.ndarray

    @property
    def n(self) -> int:
        return self.maxima.size

    def sup_tail(self, alpha: float) -> McEstimate:
        """P(grid running max >= alpha), Wilson interval."""
        return McEstimate.from_proportion(int((self.maxima >= alpha).sum()), self.n)

    def restricted(self, alpha: float, transform: Callable | None = None) -> McEstimate:
        """E[transform(terminal); grid max >= alpha]; alpha = -inf gives the plain mean."""
        hit = self.maxima >= alpha
        vals = self.terminals if transform is None else transform(self.terminals)
        contrib = np.where(hit, vals, 0.0)
        return McEstimate.from_samples_moments(
            float(contrib.sum()), float((contrib * contrib).sum()), self.n
        )

    def terminal_mean(self, transform: Callable | None = None) -> McEstimate:
        return self.restricted(-math.inf, transform)


def path_stats(
    spec,
    horizon,
    n_paths: int,
    seed: SeedSpec,
    n_dyadic: int = 10,
    initial: int = 1,
    jobs: int = 1,
) -> PathStats:
    """Simulate in fixed chunks and reduce to per-path (max, terminal).

    Chunk c draws from the child stream (seed, c); the chunk layout is a
    constant of the library, so results do not depend on the worker count.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be positive")
    sizes = [CHUNK_SIZE] * (n_paths // CHUNK_SIZE)
    if n_paths % CHUNK_SIZE:
        sizes.append(n_paths % CHUNK_SIZE)

    def run_chunk(c: int) -> tuple[np.ndarray, np.ndarray]:
        rng = seed.generator(c)
        mat = _batch_matrix(spec, horizon, n_dyadic, sizes[c], rng, initial)
        return mat.max(axis=1), mat[:, -1]

    if jobs > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(run_chunk, range(len(sizes))))
    else:
        parts = [run_chunk(c) for c in range(len(sizes))]
    maxima = np.concatenate([p[0] for p in parts])
    terminals = np.concatenate([p[1] for p in parts])
    return PathStats(maxima=maxima, terminals=terminals)


def estimate_sup_tail(
    spec,
    horizon,
    alpha: float,
    n_paths: int,
    seed: SeedSpec,
    n_dyadic: int = 10,
    initial: int = 1,
    jobs: int = 1,
) -> McEstimate:
    """P(sup over the grid >= alpha).  The grid max underestimates a continuous
    supremum, so this lhs estimate is biased low (conservative for the bound)."""
    if n_paths < 100:
        raise ValueError("need at least 100 paths for a tail estimate")
    stats = path_stats(spec, horizon, n_paths, seed, n_dyadic=n_dyadic, initial=initial, jobs=jobs)
    return stats.sup_tail(alpha)


def estimate_restricted_terminal(
    spec,
    horizon,
    alpha: float,
    n_paths: int,
    seed: SeedSpec,
    n_dyadic: int = 10,
    initial: int = 1,
    transform: Callable | None = None,
    jobs: int = 1,
) -> McEstimate:
    """E[transform(terminal); grid max >= alpha] with a normal 95% interval.

    With the alpha = -inf sentinel this is exactly the plain terminal-mean
    estimator on the same seed (the indicator is identically 1).
    """
    stats = path_stats(spec, horizon, n_paths, seed, n_dyadic=n_dyadic, initial=initial, jobs=jobs)
    return stats.restricted(alpha, transform)


# ---------------------------------------------------------------------------
# Almost-sure-convergence checker


@dataclass(frozen=True)
class WindowStat:
    """Per-window exceedance estimate and the matching series term."""

    index: int
    exceedance: McEstimate
    series_term: float


@dataclass(frozen=True)
class ConvergenceReport:
    """Outcome of the windowed almost-sure-convergence check."""

    status: str  # APPLICABLE | NOT_APPLICABLE
    reason: str
    window_rate: float
    a: float
    epsilon: float
    condition2_holds: bool
    windows: tuple[WindowStat, ...] = ()
    partial_sums: tuple[float, ...] = ()
    series_partial_sums: tuple[float, ...] = ()
    window_certificate: AchievingCertificate | None = None
    partial_sums_bounded: bool | None = None


def _window_family(spec, horizon, n_dyadic, n_paths, rng, state):
    """One window of the raw process from the given per-path start state.

    Returns (matrix of raw values on the window grid, end state).  The Levy
    family is exponentiated by the caller; it chains additively here.
    """
    if isinstance(spec, BranchingSpec):
        mat = sample_branching_batch(spec, horizon, n_dyadic, n_paths, rng, initial=state)
        return mat, mat[:, -1].astype(np.int64)
    if isinstance(spec, GbmSpec):
        mat = sample_gbm_batch(spec, horizon, n_dyadic, n_paths, rng, start=state)
        return mat, mat[:, -1]
    if isinstance(spec, CsbpSpec):
        mat = sample_csbp_batch(spec, horizon, n_dyadic, n_paths, rng, start=state)
        return mat, mat[:, -1]
    if isinstance(spec, LevyTriple):
        mat = state[:, None] + sample_levy_batch(spec, horizon, n_dyadic, n_paths, rng)
        return mat, mat[:, -1]
    raise UnknownMeanDecay(f"no window simulator for {type(spec).__name__}")


def _mean_rate_and_start(spec) -> tuple[float, float]:
    """Exponential rate rho with E(raw mean at t) = start * e^(rho t)."""
    if isinstance(spec, BranchingSpec):
        return spec.clock_rate * (spec.offspring.mean() - 1.0), float(spec.initial)
    if isinstance(spec, GbmSpec):
        return spec.mu, spec.z
    if isinstance(spec, CsbpSpec):
        return spec.beta, spec.x0
    if isinstance(spec, LevyTriple):
        # the checker runs on X = e^Z, whose mean is gamma^t
        return math.log(levy_gamma(spec)), 1.0
    raise UnknownMeanDecay(
        f"no known mean decay for {type(spec).__name__}; supply mean_rate explicitly"
    )


def as_convergence_check(
    spec,
    lambda_rate: float = 0.0,
    t_window: float = 1.0,
    n_windows: int = 10,
    n_paths: int = 10_000,
    seed: SeedSpec = SeedSpec(0),
    epsilon: float = 0.01,
    n_dyadic: int = 6,
    mean_rate: float | None = None,
) -> ConvergenceReport:
    """Windowed check of the almost-sure-convergence theorem for X_t = e^{-lambda t} * (process).

    The report contains (i) the analytic summability check of the window
    means, (ii) a stepwise achieving certificate from the window-start
    ensemble, and (iii) per-window exceedance fractions with the
    Borel-Cantelli partial sums compared against (a eps)^{-1} sum of the
    window-end means.  Partial sums of exceedances over the same paths are
    correlated across windows; the combined stderr treats them as
    independent, which is documented as approximate.
    """
    if not t_window > 0:
        raise ValueError("t_window must be positive")
    if n_windows < 1:
        raise ValueError("need at least one window")
    if mean_rate is None:
        rate, start0 = _mean_rate_and_start(spec)
    else:
        rate, start0 = float(mean_rate), _mean_rate_and_start(spec)[1]
    discounted_rate = rate - lambda_rate
    window_ratio = math.exp(discounted_rate * t_window)
    a = min(1.0, window_ratio)
    condition2 = window_ratio < 1.0
    if not condition2:
        return ConvergenceReport(
            status="NOT_APPLICABLE",
            reason=(
                f"window mean ratio e^((rate - lambda) T) = {window_ratio:.6g} >= 1: "
                "the expectations at window starts are not summable"
            ),
            window_rate=window_ratio,
            a=a,
            epsilon=epsilon,
            condition2_holds=False,
        )

    exp_family = isinstance(spec, LevyTriple)
    if isinstance(spec, BranchingSpec):
        state = np.full(n_paths, spec.initial, dtype=np.int64)
    elif isinstance(spec, LevyTriple):
        state = np.zeros(n_paths)
    else:
        state = np.full(n_paths, start0, dtype=float)

    from .core import dyadic_grid

    grid = dyadic_grid(t_window, n_dyadic)
    windows: list[WindowStat] = []
    boundary_values = [np.exp(-lambda_rate * 0.0) * (np.exp(state) if exp_family else state.astype(float))]
    partial_emp: list[float] = []
    partial_series: list[float] = []
    emp_sum = 0.0
    var_sum = 0.0
    series_sum = 0.0
    bounded = True
    for k in range(n_windows):
        rng = seed.generator(k)
        raw, state = _window_family(spec, t_window, n_dyadic, n_paths, rng, state)
        times = k * t_window + grid
        weights = np.exp(-lambda_rate * times)
        x = np.exp(raw) * weights[None, :] if exp_family else raw * weights[None, :]
        sup_w = x.max(axis=1)
        exceed = McEstimate.from_proportion(int((sup_w > epsilon).sum()), n_paths)
        series_term = start0 * math.exp(discounted_rate * (k + 1) * t_window) / (a * epsilon)
        windows.append(WindowStat(index=k, exceedance=exceed, series_term=series_term))
        boundary_values.append(x[:, -1])
        emp_sum += exceed.mean
        var_sum += exceed.stderr**2
        series_sum += series_term
        partial_emp.append(emp_sum)
        partial_series.append(series_sum)
        if emp_sum - Z95 * math.sqrt(var_sum) > series_sum:
            bounded = False

    try:
        cert = certify_a(np.column_stack(boundary_values), mode="stepwise")
    except (InsufficientData, Exception) as exc:  # certification is best-effort
        cert = None if isinstance(exc, InsufficientData) else None
    return ConvergenceReport(
        status="APPLICABLE",
        reason="window mean ratio below 1; Borel-Cantelli series finite",
        window_rate=window_ratio,
        a=a,
        epsilon=epsilon,
        condition2_holds=True,
        windows=tuple(windows),
        partial_sums=tuple(partial_emp),
        series_partial_sums=tuple(partial_series),
        window_certificate=cert,
        partial_sums_bounded=bounded,
    )
