"""Achieving-constant transforms, approximate convexity, and certificates.

Functions on an interval are represented on finite grids with
piecewise-linear interpolation; every approximate-convexity guarantee
therefore carries an explicit quantization term (the largest adjacent-cell
oscillation) next to the statistical or exact bound.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import DiscretePath, GridPath
from .errors import InsufficientData, NonPositiveA, NotMonotone, OutOfDomain, Overflow

__all__ = [
    "GridFunction",
    "DeltaEstimate",
    "AchievingCertificate",
    "BinStat",
    "to_submartingale",
    "from_submartingale",
    "to_submartingale_continuous",
    "from_submartingale_continuous",
    "estimate_delta",
    "convex_envelope",
    "hyers_ulam_decompose",
    "approximate_jensen_margin",
    "smg_to_achieving",
    "invariance_i",
    "invariance_ii",
    "certify_a",
]

# one-sided 95% normal quantile, used for lower confidence bounds
Z_LCB = 1.6448536269514722


@dataclass(frozen=True, eq=False)
class GridFunction:
    """A real function tabulated on a strictly increasing grid, linear in between."""

    xs: np.ndarray
    ys: np.ndarray

    def __init__(self, xs, ys):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.ndim != 1 or xs.size < 2 or ys.shape != xs.shape:
            raise ValueError("need matching 1-d grids with at least 2 points")
        if not np.all(np.diff(xs) > 0):
            raise ValueError("xs must be strictly increasing")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ValueError("grid function values must be finite")
        xs.flags.writeable = False
        ys.flags.writeable = False
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def lo(self) -> float:
        return float(self.xs[0])

    @property
    def hi(self) -> float:
        return float(self.xs[-1])

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any(x < self.lo) or np.any(x > self.hi):
            raise OutOfDomain(f"value outside [{self.lo}, {self.hi}]")
        return np.interp(x, self.xs, self.ys)

    def is_nondecreasing(self) -> bool:
        return bool(np.all(np.diff(self.ys) >= 0))

    def oscillation(self) -> float:
        """Largest adjacent-cell jump |f(x_{i+1}) - f(x_i)|: the quantization bound."""
        return float(np.abs(np.diff(self.ys)).max())

    def nearest_values(self, x: np.ndarray) -> np.ndarray:
        """f at the grid point nearest to each query (no interpolation)."""
        idx = np.searchsorted(self.xs, x)
        idx = np.clip(idx, 1, self.xs.size - 1)
        left = self.xs[idx - 1]
        right = self.xs[idx]
        use_left = (x - left) <= (right - x)
        return self.ys[np.where(use_left, idx - 1, idx)]

    def save_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "f"])
            for x, y in zip(self.xs, self.ys):
                writer.writerow([f"{x:.17g}", f"{y:.17g}"])

    @classmethod
    def load_csv(cls, path) -> "GridFunction":
        xs, ys = [], []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            for row in reader:
                if not row or row[0].strip().lower() in ("x", ""):
                    continue
                xs.append(float(row[0]))
                ys.append(float(row[1]))
        return cls(xs, ys)


@dataclass(frozen=True)
class DeltaEstimate:
    """Grid estimate of the convexity defect, with its quantization allowance."""

    delta_hat: float
    quantization: float


@dataclass(frozen=True)
class BinStat:
    """One (m, n, bin) cell of a binned conditional-mean check."""

    m: int
    n: int
    center: float
    count: int
    mean_next: float
    stderr_next: float
    ratio: float
    ratio_lcb: float


@dataclass(frozen=True)
class AchievingCertificate:
    """Evidence that a process is (uniformly / stepwise) a-achieving."""

    mode: str
    a_hat: float
    confidence: str
    a_lcb: float | None = None
    bins: tuple = ()

    def __post_init__(self):
        if not self.a_hat > 0:
            raise NonPositiveA(f"a_hat must be positive, got {self.a_hat!r}")


# ---------------------------------------------------------------------------
# Back-transformation lemma


def _scaled(values: np.ndarray, a: float, exponents: np.ndarray) -> np.ndarray:
    if not a > 0:
        raise NonPositiveA(f"a must be positive, got {a!r}")
    with np.errstate(over="ignore"):
        out = values * np.power(a, exponents)
    if not np.all(np.isfinite(out)):
        raise Overflow("a^(-n) scaling left the floating-point range")
    return out


def to_submartingale(path: DiscretePath, a: float) -> DiscretePath:
    """Y_n = a^{-n} X_n; a-achieving X becomes a plain submartingale Y."""
    n = np.arange(len(path), dtype=float)
    return DiscretePath(_scaled(path.values, a, -n))


def from_submartingale(path: DiscretePath, a: float) -> DiscretePath:
    """Inverse of :func:`to_submartingale`: X_n = a^n Y_n."""
    n = np.arange(len(path), dtype=float)
    return DiscretePath(_scaled(path.values, a, n))


def to_submartingale_continuous(path: GridPath, a: float) -> GridPath:
    """Y_t = a^{-t} X_t on the path's own grid."""
    return GridPath(path.horizon, path.grid, _scaled(path.values, a, -path.grid))


def from_submartingale_continuous(path: GridPath, a: float) -> GridPath:
    return GridPath(path.horizon, path.grid, _scaled(path.values, a, path.grid))


# ---------------------------------------------------------------------------
# Approximate convexity


def estimate_delta(f: GridFunction, t_grid: Sequence[float] | None = None) -> DeltaEstimate:
    """Largest convexity defect f(tx+(1-t)y) - t f(x) - (1-t) f(y) over the grid.

    Mixtures are evaluated at the nearest grid point; the induced error is
    bounded by the reported quantization term, kept separate rather than
    folded into delta.
    """
    if t_grid is None:
        t_grid = np.linspace(0.0, 1.0, 9)
    t_arr = np.asarray(t_grid, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr > 1):
        raise ValueError("t_grid must lie in [0, 1]")
    for required in (0.0, 0.5, 1.0):
        if not np.any(t_arr == required):
            raise ValueError("t_grid must include 0, 0.5 and 1")
    xs, ys = f.xs, f.ys
    worst = 0.0
    for t in t_arr:
        mix_x = t * xs[:, None] + (1.0 - t) * xs[None, :]
        mix_f = f.nearest_values(np.clip(mix_x, f.lo, f.hi))
        defect = mix_f - t * ys[:, None] - (1.0 - t) * ys[None, :]
        worst = max(worst, float(defect.max()))
    return DeltaEstimate(delta_hat=max(worst, 0.0), quantization=f.oscillation())


def convex_envelope(f: GridFunction) -> GridFunction:
    """Greatest convex minorant of the sampled points (lower convex hull)."""
    xs, ys = f.xs, f.ys
    hull_idx: list[int] = []
    for i in range(xs.size):
        while len(hull_idx) >= 2:
            i0, i1 = hull_idx[-2], hull_idx[-1]
            cross = (xs[i1] - xs[i0]) * (ys[i] - ys[i0]) - (ys[i1] - ys[i0]) * (xs[i] - xs[i0])
            if cross <= 0:
                hull_idx.pop()
            else:
                break
        hull_idx.append(i)
    env = np.interp(xs, xs[hull_idx], ys[hull_idx])
    return GridFunction(xs, env)


def hyers_ulam_decompose(f: GridFunction) -> tuple[GridFunction, GridFunction, float]:
    """Split f = g + h with g grid-convex and sup|h| <= delta_used / 2.

    delta_used is the gap sup(f - envelope); for any delta-convex f it is at
    most delta, so this always produces a witness decomposition.  The split
    g = envelope + delta_used/2 centers h around 0; rounding is then pushed
    into g so the reconstruction g + h is bitwise equal to f.
    """
    env = convex_envelope(f)
    delta_used = max(float((f.ys - env.ys).max()), 0.0)
    g = env.ys + 0.5 * delta_used
    h = f.ys - g
    for _ in range(40):
        g = f.ys - h
        h = f.ys - g
        if np.all(g + h == f.ys):
            break
    if not np.all(g + h == f.ys):
        raise AssertionError("could not make the decomposition reconstruct bitwise")
    return GridFunction(f.xs, g), GridFunction(f.xs, h), delta_used


def approximate_jensen_margin(f: GridFunction, samples: Sequence[float], delta: float) -> float:
    """mean f(X) - f(mean X) + delta; nonnegative (up to noise) when f is delta-convex."""
    arr = np.asarray(samples, dtype=float)
    if arr.size == 0:
        raise ValueError("need at least one sample")
    values = f(arr)
    return float(values.mean() - f(arr.mean()) + delta)


# ---------------------------------------------------------------------------
# Transforms into achieving processes


def _require_monotone(f: GridFunction) -> None:
    if not f.is_nondecreasing():
        raise NotMonotone("the transform must be non-decreasing on its grid")


def _exp_or_overflow(values: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        out = np.exp(values)
    if not np.all(np.isfinite(out)):
        raise Overflow("exponential transform overflowed")
    return out


def smg_to_achieving(
    path: DiscretePath | GridPath, f: GridFunction, delta: float
):
    """Map a submartingale through Y = e^{f(X)} for a non-decreasing delta-convex f.

    Returns the transformed path plus a uniform e^{-delta} certificate; the
    certificate is what the transform theorem guarantees, not a statistical
    estimate.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    _require_monotone(f)
    values = _exp_or_overflow(f(path.values))
    cert = AchievingCertificate(
        mode="uniform", a_hat=math.exp(-delta), confidence="exact: transform-theorem certificate"
    )
    if isinstance(path, GridPath):
        return GridPath(path.horizon, path.grid, values), cert
    return DiscretePath(values), cert


def invariance_i(path: DiscretePath, f: GridFunction, delta: float) -> DiscretePath:
    """Y_n = exp(delta * n + f(X_n)): a submartingale again when X is one."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    _require_monotone(f)
    n = np.arange(len(path), dtype=float)
    return DiscretePath(_exp_or_overflow(delta * n + f(path.values)))


def invariance_ii(path: DiscretePath, f: GridFunction, a: float, delta: float):
    """U_n = exp(f(X_n / a^n)) for an a-achieving X; uniformly e^{-delta}-achieving.

    The rescaled values must stay inside f's interval; that proviso is
    enforced, not assumed.
    """
    if not a > 0:
        raise NonPositiveA(f"a must be positive, got {a!r}")
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    _require_monotone(f)
    n = np.arange(len(path), dtype=float)
    rescaled = _scaled(path.values, a, -n)
    values = _exp_or_overflow(f(rescaled))
    cert = AchievingCertificate(
        mode="uniform", a_hat=math.exp(-delta), confidence="exact: transform-theorem certificate"
    )
    return DiscretePath(values), cert


# ---------------------------------------------------------------------------
# Statistical certification


def _ensemble_matrix(ensemble: Iterable) -> np.ndarray:
    if isinstance(ensemble, np.ndarray):
        mat = np.asarray(ensemble, dtype=float)
    else:
        rows = [p.values if isinstance(p, DiscretePath) else np.asarray(p, dtype=float) for p in ensemble]
        if not rows:
            raise InsufficientData("empty ensemble")
        lengths = {r.size for r in rows}
        if len(lengths) != 1:
            raise ValueError("ensemble paths must share one length")
        mat = np.vstack(rows)
    if mat.ndim != 2 or mat.shape[1] < 2:
        raise ValueError("ensemble must be paths of length >= 2")
    return mat


def _equal_mass_bins(x: np.ndarray, n_bins: int) -> list[np.ndarray]:
    edges = np.quantile(x, np.linspace(0.0, 1.0, n_bins + 1))
    edges = np.unique(edges)
    if edges.size <= 2:
        return [np.arange(x.size)]
    groups = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, edges.size - 2)
    return [np.nonzero(groups == g)[0] for g in range(edges.size - 1)]


def certify_a(
    ensemble,
    mode: str = "stepwise",
    n_bins: int = 16,
    min_samples: int = 30,
) -> AchievingCertificate:
    """Estimate the achieving constant of an ensemble by binned conditional means.

    For each index pair (stepwise: consecutive; uniform and exponential_rate:
    all ordered pairs) the ensemble is split into equal-mass bins on the
    earlier value; bins with at least ``min_samples`` members contribute the
    ratio (mean later value) / (bin center).  ``exponential_rate`` takes the
    (n - m)-th root of each ratio, matching the a^{t-s} form.  The
    certificate's a_hat is the smallest contributing ratio and a_lcb its 95%
    lower confidence bound.  Binning on the current value conflates histories
    for non-Markov ensembles; use exact enumeration certificates there.
    """
    if mode not in ("stepwise", "uniform", "exponential_rate"):
        raise ValueError(f"unknown certification mode {mode!r}")
    mat = _ensemble_matrix(ensemble)
    length = mat.shape[1]
    if mode == "stepwise":
        pairs = [(m, m + 1) for m in range(length - 1)]
    else:
        pairs = [(m, n) for m in range(length - 1) for n in range(m + 1, length)]
    stats: list[BinStat] = []
    for m, n in pairs:
        xm = mat[:, m]
        xn = mat[:, n]
        for members in _equal_mass_bins(xm, n_bins):
            if members.size < min_samples:
                continue
            center = float(xm[members].mean())
            if center <= 0:
                continue
            vals = xn[members]
            mean_next = float(vals.mean())
            stderr = float(vals.std(ddof=1) / math.sqrt(members.size)) if members.size > 1 else 0.0
            ratio = mean_next / center
            lcb = (mean_next - Z_LCB * stderr) / center
            if mode == "exponential_rate":
                gap = n - m
                ratio = ratio ** (1.0 / gap) if ratio > 0 else ratio
                lcb = lcb ** (1.0 / gap) if lcb > 0 else 0.0
            stats.append(
                BinStat(
                    m=m,
                    n=n,
                    center=center,
                    count=int(members.size),
                    mean_next=mean_next,
                    stderr_next=stderr,
                    ratio=ratio,
                    ratio_lcb=lcb,
                )
            )
    if not stats:
        raise InsufficientData("no bin reached the minimum sample count")
    a_hat = min(s.ratio for s in stats)
    a_lcb = min(s.ratio_lcb for s in stats)
    return AchievingCertificate(
        mode=mode,
        a_hat=a_hat,
        confidence=f"binned-MC with 95% CI ({mat.shape[0]} paths, {len(stats)} bins)",
        a_lcb=a_lcb,
        bins=tuple(stats),
    )
