"""Process families: specifications, path simulators, and their analytic constants.

Every simulator is a pure function of ``(spec, seed)``.  Continuous-time
families are sampled on dyadic-uniform grids (2^n intervals on [0, T]) so
that coarse grids are exact subsets of fine ones; the Brownian families are
built by bridge refinement, which makes sup-estimates monotone under grid
refinement on matched seeds.

Batch variants (``sample_*_batch``) return an (n_paths, n_points) matrix and
are the workhorses behind the Monte Carlo estimators; the single-path
operations wrap them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from .core import DiscretePath, GridPath, SeedSpec, dyadic_grid
from .errors import NonPositiveA, Overflow, PopulationCap

__all__ = [
    "StepLaw",
    "RandomWalkSpec",
    "TimeSeriesSpec",
    "ShiftedExponentialSteps",
    "SelfExcitingSteps",
    "LevyTriple",
    "OffspringLaw",
    "BranchingSpec",
    "GbmSpec",
    "CsbpSpec",
    "DEFAULT_POPULATION_CAP",
    "simulate_random_walk",
    "simulate_time_series",
    "simulate_levy",
    "simulate_branching",
    "simulate_gw_discrete",
    "simulate_gbm",
    "simulate_csbp",
    "phi_pi",
    "levy_gamma",
    "gamma_criterion",
    "theorem_constant_a",
]

DEFAULT_POPULATION_CAP = 10**7

PROB_TOL = 1e-12


@dataclass(frozen=True)
class StepLaw:
    """A finite-support step distribution: P(Y = support[j]) = probs[j]."""

    support: tuple
    probs: tuple

    def __init__(self, support: Sequence[float], probs: Sequence[float]):
        sup = tuple(float(x) for x in support)
        pr = tuple(float(p) for p in probs)
        if len(sup) != len(pr) or not sup:
            raise ValueError("support and probs must be non-empty and equal length")
        if len(set(sup)) != len(sup):
            raise ValueError("support values must be distinct")
        if any(p < 0 for p in pr):
            raise ValueError("probabilities must be nonnegative")
        if abs(sum(pr) - 1.0) > PROB_TOL:
            raise ValueError("probabilities must sum to 1 within 1e-12")
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "probs", pr)

    def mean(self) -> float:
        return math.fsum(p * x for p, x in zip(self.probs, self.support))

    def exp_moment(self) -> float:
        """E e^Y, exact for the finite support."""
        return math.fsum(p * math.exp(x) for p, x in zip(self.probs, self.support))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        cum = np.cumsum(self.probs)
        cum[-1] = 1.0
        idx = np.searchsorted(cum, rng.random(n), side="right")
        return np.asarray(self.support, dtype=float)[idx]


@dataclass(frozen=True)
class RandomWalkSpec:
    """A walk S_0 = start with independent, possibly time-varying steps."""

    steps: tuple
    start: float = 0.0

    def __init__(self, steps: Sequence[StepLaw], start: float = 0.0):
        steps = tuple(steps)
        if not steps:
            raise ValueError("need at least one step law")
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "start", float(start))

    @property
    def n_steps(self) -> int:
        return len(self.steps)


@runtime_checkable
class StepGenerator(Protocol):
    """Rule producing the next batch of increments given the history so far."""

    def increments(self, history: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Next increments for each row of ``history`` (shape (n_paths, n+1))."""
        ...


@dataclass(frozen=True)
class ShiftedExponentialSteps:
    """I.i.d. increments ell + Exp(rate): bounded below by ell, unbounded above."""

    ell: float
    rate: float = 1.0

    def increments(self, history: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return self.ell + rng.exponential(1.0 / self.rate, history.shape[0])


@dataclass(frozen=True)
class SelfExcitingSteps:
    """Non-Markovian increments: a large jump inflates the scale of the next one.

    increment_n = ell + Exp(1) * scale_n with
    scale_n = base_scale * (1 + excitement * (increment_{n-1} - ell)).
    The walk (S_n) alone is not Markov (the law of the next step depends on
    the last increment), yet every step exceeds ell.
    """

    ell: float
    base_scale: float = 1.0
    excitement: float = 0.5

    def increments(self, history: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        n_paths = history.shape[0]
        if history.shape[1] >= 2:
            prev = history[:, -1] - history[:, -2]
            scale = self.base_scale * (1.0 + self.excitement * (prev - self.ell))
        else:
            scale = np.full(n_paths, self.base_scale)
        return self.ell + rng.exponential(1.0, n_paths) * scale


@dataclass(frozen=True)
class TimeSeriesSpec:
    """A time series whose jumps are bounded below: S_{n+1} - S_n > ell a.s."""

    ell: float
    generator: StepGenerator
    start: float = 0.0

    def __post_init__(self):
        if not self.ell < 0:
            raise ValueError("ell must be strictly negative")


@dataclass(frozen=True)
class LevyTriple:
    """Finite-activity Levy process: Z_t = b t + sigma W_t + compound Poisson.

    ``jump_rate * jump_law`` plays the role of the Levy measure; the drift b
    is the actual linear drift of the simulated path (no truncation
    compensation is applied at simulation time).
    """

    sigma: float
    b: float
    jump_rate: float
    jump_law: StepLaw | None = None

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.jump_rate < 0:
            raise ValueError("jump_rate must be nonnegative")
        if self.jump_rate > 0:
            if self.jump_law is None:
                raise ValueError("a positive jump_rate needs a jump_law")
            if any(x == 0.0 for x in self.jump_law.support):
                raise ValueError("the jump law must not put mass at 0")


@dataclass(frozen=True)
class OffspringLaw:
    """Offspring counts 0..K with probabilities pmf[0..K]."""

    pmf: tuple

    def __init__(self, pmf: Sequence[float]):
        pm = tuple(float(p) for p in pmf)
        if not pm:
            raise ValueError("pmf must be non-empty")
        if any(p < 0 for p in pm):
            raise ValueError("pmf entries must be nonnegative")
        if abs(sum(pm) - 1.0) > PROB_TOL:
            raise ValueError("pmf must sum to 1 within 1e-12")
        object.__setattr__(self, "pmf", pm)

    @property
    def max_offspring(self) -> int:
        return len(self.pmf) - 1

    def mean(self) -> float:
        """Mean offspring number mu = h'(1)."""
        return math.fsum(k * p for k, p in enumerate(self.pmf))

    def pgf(self, z: float) -> float:
        """h(z) = E z^X, evaluated by Horner's scheme."""
        acc = 0.0
        for p in reversed(self.pmf):
            acc = acc * z + p
        return acc

    def sample_counts(self, n_parents: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Total offspring of n_parents[i] independent individuals, per row."""
        counts = rng.multinomial(n_parents, self.pmf)
        return counts @ np.arange(len(self.pmf))


@dataclass(frozen=True)
class BranchingSpec:
    """Continuous-time Galton-Watson: branch events at rate b per individual."""

    offspring: OffspringLaw
    clock_rate: float
    initial: int = 1

    def __post_init__(self):
        if not self.clock_rate > 0:
            raise ValueError("clock_rate must be strictly positive")
        if self.initial < 1:
            raise ValueError("initial population must be a positive integer")


@dataclass(frozen=True)
class GbmSpec:
    """dS_t = mu S_t dt + sigma S_t dW_t started at z > 0."""

    mu: float
    sigma: float
    z: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be strictly positive")
        if not self.z > 0:
            raise ValueError("start value z must be strictly positive")


@dataclass(frozen=True)
class CsbpSpec:
    """Quadratic-mechanism CSBP, run as the Feller diffusion dX = beta X dt + sqrt(2 k X) dW."""

    beta: float
    k: float
    x0: float

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("k must be strictly positive")
        if self.x0 < 0:
            raise ValueError("x0 must be nonnegative")


# ---------------------------------------------------------------------------
# Brownian machinery


def brownian_bridge_batch(
    horizon: float, n_dyadic: int, n_paths: int, rng: np.random.Generator
) -> np.ndarray:
    """Standard Brownian paths on the dyadic grid, built by midpoint refinement.

    Draw order is level-major (endpoint first, then midpoints level by
    level), so simulating at depth n consumes a prefix of the draws used at
    depth n+1: matched seeds give nested paths.
    """
    npts = 2**n_dyadic + 1
    w = np.zeros((n_paths, npts))
    w[:, -1] = rng.standard_normal(n_paths) * math.sqrt(horizon)
    for level in range(1, n_dyadic + 1):
        half = 2 ** (n_dyadic - level)
        idx = np.arange(half, 2**n_dyadic, 2 * half)
        noise = rng.standard_normal((n_paths, idx.size)) * math.sqrt(horizon / 2.0 ** (level + 1))
        w[:, idx] = 0.5 * (w[:, idx - half] + w[:, idx + half]) + noise
    return w


# ---------------------------------------------------------------------------
# Batch simulators (matrix of paths) and single-path wrappers


def sample_walk_batch(spec: RandomWalkSpec, n_paths: int, rng: np.random.Generator) -> np.ndarray:
    out = np.empty((n_paths, spec.n_steps + 1))
    out[:, 0] = spec.start
    for i, law in enumerate(spec.steps):
        out[:, i + 1] = out[:, i] + law.sample(n_paths, rng)
    return out


def simulate_random_walk(spec: RandomWalkSpec, seed: SeedSpec) -> DiscretePath:
    """One walk trajectory S_0..S_N, deterministic given the seed."""
    return DiscretePath(sample_walk_batch(spec, 1, seed.generator())[0])


def sample_time_series_batch(
    spec: TimeSeriesSpec, n_steps: int, n_paths: int, rng: np.random.Generator
) -> np.ndarray:
    if n_steps < 0:
        raise ValueError("n_steps must be nonnegative")
    out = np.empty((n_paths, n_steps + 1))
    out[:, 0] = spec.start
    for i in range(n_steps):
        inc = np.asarray(spec.generator.increments(out[:, : i + 1], rng), dtype=float)
        if inc.shape != (n_paths,):
            raise ValueError("step generator returned a batch of the wrong shape")
        if not np.all(inc > spec.ell):
            raise ValueError("step generator violated the jump floor ell")
        out[:, i + 1] = out[:, i] + inc
    return out


def simulate_time_series(spec: TimeSeriesSpec, n_steps: int, seed: SeedSpec) -> DiscretePath:
    """One time-series trajectory with all jumps above the floor ell."""
    return DiscretePath(sample_time_series_batch(spec, n_steps, 1, seed.generator())[0])


def _compound_poisson_on_grid(
    triple: LevyTriple, horizon: float, grid: np.ndarray, n_paths: int, rng: np.random.Generator
) -> np.ndarray:
    """Cumulative jump component at each grid time.

    Event times are drawn once for the whole horizon (counts, then times,
    then sizes), so the jump component does not depend on the grid depth;
    refinement only reads the same events at more time points.
    """
    acc = np.zeros((n_paths, grid.size))
    counts = rng.poisson(triple.jump_rate * horizon, n_paths)
    total = int(counts.sum())
    if total > 0:
        times = rng.random(total) * horizon
        sizes = triple.jump_law.sample(total, rng)
        pid = np.repeat(np.arange(n_paths), counts)
        at = np.searchsorted(grid, times, side="left")
        np.add.at(acc, (pid, at), sizes)
    return np.cumsum(acc, axis=1)


def sample_levy_batch(
    triple: LevyTriple, horizon: float, n_dyadic: int, n_paths: int, rng: np.random.Generator
) -> np.ndarray:
    grid = dyadic_grid(horizon, n_dyadic)
    out = np.zeros((n_paths, grid.size))
    if triple.jump_rate > 0:
        out += _compound_poisson_on_grid(triple, horizon, grid, n_paths, rng)
    if triple.sigma > 0:
        out += triple.sigma * brownian_bridge_batch(horizon, n_dyadic, n_paths, rng)
    out += triple.b * grid
    return out


def simulate_levy(triple: LevyTriple, horizon: float, n_dyadic: int, seed: SeedSpec) -> GridPath:
    """One Levy path Z on the dyadic grid: drift + Brownian part + exact
    compound-Poisson jumps (no small-jump truncation is ever needed for a
    finite-activity triple)."""
    grid = dyadic_grid(horizon, n_dyadic)
    values = sample_levy_batch(triple, horizon, n_dyadic, 1, seed.generator())[0]
    return GridPath(horizon, grid, values)


def sample_branching_batch(
    spec: BranchingSpec,
    horizon: float,
    n_dyadic: int,
    n_paths: int,
    rng: np.random.Generator,
    cap: int = DEFAULT_POPULATION_CAP,
    initial: np.ndarray | None = None,
) -> np.ndarray:
    """Event-driven continuous-time Galton-Watson, recorded on the dyadic grid.

    Each event: wait Exp(b * Z), then one individual is replaced by k
    offspring, k drawn from the offspring law.  The event chain is simulated
    exactly; the grid only samples the resulting step function, so the grid
    depth never changes the chain.
    """
    grid = dyadic_grid(horizon, n_dyadic)
    if initial is None:
        pop = np.full(n_paths, spec.initial, dtype=np.int64)
    else:
        pop = np.asarray(initial, dtype=np.int64).copy()
        if pop.shape != (n_paths,):
            raise ValueError("initial must have one entry per path")
        if np.any(pop < 0):
            raise ValueError("initial populations must be nonnegative")
    start = pop.astype(float)
    t = np.zeros(n_paths)
    events = np.zeros(n_paths, dtype=np.int64)
    delta = np.zeros((n_paths, grid.size))
    offsets = np.arange(spec.offspring.max_offspring + 1)
    cum = np.cumsum(spec.offspring.pmf)
    cum[-1] = 1.0
    while True:
        ia = np.nonzero((pop > 0) & (t <= horizon))[0]
        if ia.size == 0:
            break
        waits = rng.exponential(1.0, ia.size) / (spec.clock_rate * pop[ia])
        t_new = t[ia] + waits
        t[ia] = t_new
        live = ia[t_new <= horizon]
        if live.size == 0:
            continue
        kids = offsets[np.searchsorted(cum, rng.random(live.size), side="right")]
        change = kids - 1
        np.add.at(delta, (live, np.searchsorted(grid, t[live], side="left")), change)
        pop[live] += change
        events[live] += 1
        if np.any(pop > cap) or np.any(events > cap):
            raise PopulationCap(f"population or event count exceeded cap {cap}")
    return start[:, None] + np.cumsum(delta, axis=1)


def simulate_branching(
    spec: BranchingSpec,
    horizon: float,
    n_dyadic: int,
    seed: SeedSpec,
    cap: int = DEFAULT_POPULATION_CAP,
) -> GridPath:
    """One continuous-time branching path, integer populations on the grid."""
    grid = dyadic_grid(horizon, n_dyadic)
    values = sample_branching_batch(spec, horizon, n_dyadic, 1, seed.generator(), cap=cap)[0]
    return GridPath(horizon, grid, values)


def sample_gw_batch(
    offspring: OffspringLaw,
    n_gens: int,
    initial: int,
    n_paths: int,
    rng: np.random.Generator,
    cap: int = DEFAULT_POPULATION_CAP,
) -> np.ndarray:
    if n_gens < 0:
        raise ValueError("n_gens must be nonnegative")
    out = np.empty((n_paths, n_gens + 1), dtype=np.int64)
    out[:, 0] = initial
    for g in range(n_gens):
        out[:, g + 1] = offspring.sample_counts(out[:, g], rng)
        if np.any(out[:, g + 1] > cap):
            raise PopulationCap(f"generation size exceeded cap {cap}")
    return out.astype(float)


def simulate_gw_discrete(
    offspring: OffspringLaw,
    n_gens: int,
    initial: int,
    seed: SeedSpec,
    cap: int = DEFAULT_POPULATION_CAP,
) -> DiscretePath:
    """Generation sizes Z_0..Z_n of a discrete Galton-Watson process."""
    if initial < 0:
        raise ValueError("initial must be nonnegative")
    return DiscretePath(sample_gw_batch(offspring, n_gens, initial, 1, seed.generator(), cap=cap)[0])


def sample_gbm_batch(
    spec: GbmSpec,
    horizon: float,
    n_dyadic: int,
    n_paths: int,
    rng: np.random.Generator,
    start: np.ndarray | None = None,
) -> np.ndarray:
    grid = dyadic_grid(horizon, n_dyadic)
    w = brownian_bridge_batch(horizon, n_dyadic, n_paths, rng)
    logs = (spec.mu - 0.5 * spec.sigma**2) * grid[None, :] + spec.sigma * w
    z = spec.z if start is None else np.asarray(start, dtype=float)[:, None]
    out = z * np.exp(logs)
    if not np.all(np.isfinite(out)):
        raise Overflow("GBM path left the floating-point range")
    return out


def simulate_gbm(spec: GbmSpec, horizon: float, n_dyadic: int, seed: SeedSpec) -> GridPath:
    """One geometric Brownian motion path with exact lognormal transitions.

    The Brownian driver is built by bridge refinement, so the marginal law at
    every grid time is exact for any depth; depth only changes how finely the
    supremum is probed.
    """
    grid = dyadic_grid(horizon, n_dyadic)
    values = sample_gbm_batch(spec, horizon, n_dyadic, 1, seed.generator())[0]
    return GridPath(horizon, grid, values)


def sample_csbp_batch(
    spec: CsbpSpec,
    horizon: float,
    n_euler: int,
    n_paths: int,
    rng: np.random.Generator,
    start: np.ndarray | None = None,
) -> np.ndarray:
    """Full-truncation Euler for dX = beta X dt + sqrt(2 k X) dW on 2^n_euler steps.

    Negative excursions of the internal iterate are clipped to 0 inside both
    the drift and the diffusion coefficient; the reported path is the clipped
    nonnegative process, which is absorbed at 0.  Weak bias is O(dt).
    """
    grid = dyadic_grid(horizon, n_euler)
    dt = float(grid[1] - grid[0]) if grid.size > 1 else horizon
    x = np.full(n_paths, spec.x0) if start is None else np.asarray(start, dtype=float).copy()
    out = np.empty((n_paths, grid.size))
    out[:, 0] = np.maximum(x, 0.0)
    for i in range(1, grid.size):
        xp = np.maximum(x, 0.0)
        noise = rng.standard_normal(n_paths)
        x = x + spec.beta * xp * dt + np.sqrt(2.0 * spec.k * xp * dt) * noise
        out[:, i] = np.maximum(x, 0.0)
    return out


def simulate_csbp(spec: CsbpSpec, horizon: float, n_euler: int, seed: SeedSpec) -> GridPath:
    """One Feller-diffusion path approximating the CSBP total mass."""
    grid = dyadic_grid(horizon, n_euler)
    values = sample_csbp_batch(spec, horizon, n_euler, 1, seed.generator())[0]
    return GridPath(horizon, grid, values)


# ---------------------------------------------------------------------------
# Analytic quantities


def phi_pi(spec: RandomWalkSpec) -> tuple[np.ndarray, np.ndarray]:
    """Per-step exponential moments phi_i = E e^{Y_i} and tail products
    pi_n = prod_{i=n}^{N-1} phi_i (with the empty product pi_N = 1)."""
    phi = np.array([law.exp_moment() for law in spec.steps])
    if not np.all(np.isfinite(phi)):
        raise Overflow("a step exponential moment overflowed")
    n = spec.n_steps
    pi = np.empty(n + 1)
    pi[n] = 1.0
    for i in range(n - 1, -1, -1):
        pi[i] = phi[i] * pi[i + 1]
    if not np.all(np.isfinite(pi)):
        raise Overflow("a tail product of exponential moments overflowed")
    return phi, pi


def levy_gamma(triple: LevyTriple) -> float:
    """gamma = E e^{Z_1} = exp(b + sigma^2/2 + rate * (E e^J - 1))."""
    jump_part = 0.0
    if triple.jump_rate > 0:
        jump_part = triple.jump_rate * (triple.jump_law.exp_moment() - 1.0)
    return math.exp(triple.b + 0.5 * triple.sigma**2 + jump_part)


def gamma_criterion(triple: LevyTriple) -> bool:
    """Whether gamma < 1, evaluated through the characteristic triple.

    With truncation h(x) = x 1{|x|<=1}, the Levy-Khintchine drift of the
    simulated process is b_lk = b + int h dLam, and
    log gamma = b_lk + sigma^2/2 + int (e^x - 1 - h(x)) Lam(dx).
    The test below is that this quantity is negative; it follows a different
    arithmetic route from :func:`levy_gamma` but is algebraically the same.
    """
    if triple.jump_rate > 0:
        law = triple.jump_law
        h_mean = math.fsum(
            p * (x if abs(x) <= 1.0 else 0.0) for p, x in zip(law.probs, law.support)
        )
        compensated = math.fsum(
            p * (math.exp(x) - 1.0 - (x if abs(x) <= 1.0 else 0.0))
            for p, x in zip(law.probs, law.support)
        )
        b_lk = triple.b + triple.jump_rate * h_mean
        integral = triple.jump_rate * compensated
    else:
        b_lk = triple.b
        integral = 0.0
    return b_lk < -0.5 * triple.sigma**2 - integral


def theorem_constant_a(spec, horizon: float | int | None = None) -> float:
    """The largest family-specific constant a with E(X_T | F_s) >= a X_s.

    Per family: random walks (for X = e^S) take min_n pi_n; Levy processes
    (for e^Z) take min(1, gamma^T); a floor-ell time series takes e^{ell N};
    branching takes e^{b (mu - 1) T} (discrete Galton-Watson: mu^N); GBM
    takes 1 for mu >= 0 and e^{mu T} otherwise; the CSBP takes e^{beta T}.
    """
    if isinstance(spec, RandomWalkSpec):
        _, pi = phi_pi(spec)
        a = float(pi.min())
    elif isinstance(spec, TimeSeriesSpec):
        if horizon is None:
            raise ValueError("time-series a needs the number of steps N")
        a = math.exp(spec.ell * int(horizon))
    elif isinstance(spec, LevyTriple):
        if horizon is None:
            raise ValueError("Levy a needs the horizon T")
        a = min(1.0, levy_gamma(spec) ** float(horizon))
    elif isinstance(spec, BranchingSpec):
        if horizon is None:
            raise ValueError("branching a needs the horizon T")
        m = spec.offspring.mean() - 1.0
        a = math.exp(spec.clock_rate * m * float(horizon))
    elif isinstance(spec, OffspringLaw):
        if horizon is None:
            raise ValueError("discrete Galton-Watson a needs the generation count")
        a = spec.mean() ** int(horizon)
    elif isinstance(spec, GbmSpec):
        if horizon is None:
            raise ValueError("GBM a needs the horizon T")
        a = 1.0 if spec.mu >= 0 else math.exp(spec.mu * float(horizon))
    elif isinstance(spec, CsbpSpec):
        if horizon is None:
            raise ValueError("CSBP a needs the horizon T")
        a = math.exp(spec.beta * float(horizon))
    else:
        raise TypeError(f"no theorem constant known for {type(spec).__name__}")
    if not a > 0:
        raise NonPositiveA(f"computed constant a = {a!r} is not positive")
    return a
