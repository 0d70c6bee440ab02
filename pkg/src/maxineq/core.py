"""Path containers, dyadic time grids, and deterministic random streams.

A realized trajectory is either a :class:`DiscretePath` (integer index) or a
:class:`GridPath` (values on a finite time grid).  Both are immutable and
reject non-finite entries at construction, so every downstream consumer can
assume clean data.  Randomness is always derived from a :class:`SeedSpec`
through the counter-based Philox generator, which makes
``(master_seed, stream_index)`` pairs independent, reproducible streams.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MissingGridPoint

__all__ = [
    "DiscretePath",
    "GridPath",
    "SeedSpec",
    "dyadic_grid",
    "running_max",
    "dyadic_skeleton",
    "indicator_restricted_terminal",
]


def _as_finite_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"{name} must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must contain only finite values")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class DiscretePath:
    """A trajectory observed at integer times 0..N."""

    values: np.ndarray

    def __init__(self, values):
        object.__setattr__(self, "values", _as_finite_array(values, "values"))

    def __len__(self) -> int:
        return self.values.size

    @property
    def terminal(self) -> float:
        return float(self.values[-1])


@dataclass(frozen=True, eq=False)
class GridPath:
    """A trajectory observed on a strictly increasing time grid over [0, T]."""

    horizon: float
    grid: np.ndarray
    values: np.ndarray

    def __init__(self, horizon: float, grid, values):
        horizon = float(horizon)
        if not (horizon > 0 and np.isfinite(horizon)):
            raise ValueError("horizon must be a finite positive time")
        g = _as_finite_array(grid, "grid")
        v = _as_finite_array(values, "values")
        if g.size != v.size:
            raise ValueError("grid and values must have equal length")
        if g[0] != 0.0 or g[-1] != horizon:
            raise ValueError("grid must start at 0 and end at the horizon")
        if g.size > 1 and not np.all(np.diff(g) > 0):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "horizon", horizon)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size

    @property
    def terminal(self) -> float:
        return float(self.values[-1])


@dataclass(frozen=True)
class SeedSpec:
    """Address of one reproducible random stream.

    Distinct ``(master_seed, stream_index)`` pairs map to independent Philox
    streams; equal pairs reproduce bitwise-identical draws.
    """

    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        if not (0 <= int(self.master_seed) < 2**64):
            raise ValueError("master_seed must fit in 64 unsigned bits")
        if int(self.stream_index) < 0:
            raise ValueError("stream_index must be nonnegative")

    def stream(self, index: int) -> "SeedSpec":
        """A sibling stream with the same master seed."""
        return SeedSpec(self.master_seed, index)

    def generator(self, *subkeys: int) -> np.random.Generator:
        """Philox generator for this stream, optionally keyed one level deeper.

        ``subkeys`` lets batch drivers derive per-chunk child streams without
        colliding with sibling ``stream_index`` values.
        """
        seq = np.random.SeedSequence(
            entropy=int(self.master_seed),
            spawn_key=(int(self.stream_index), *map(int, subkeys)),
        )
        return np.random.Generator(np.random.Philox(seq))


def dyadic_grid(horizon: float, n: int) -> np.ndarray:
    """The grid m*T/2^n, m = 0..2^n.

    Computed as (T*m) / 2^n so that coarser dyadic grids are bitwise subsets
    of finer ones (scaling by a power of two is exact in floating point).
    """
    horizon = float(horizon)
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if n < 0:
        raise ValueError("n must be nonnegative")
    m = np.arange(2**n + 1, dtype=float)
    grid = horizon * m / 2.0**n
    grid[-1] = horizon  # guard the endpoint against rounding of T*2^n/2^n
    return grid


def running_max(path: DiscretePath) -> DiscretePath:
    """Prefix maxima: output[k] = max(values[0..k])."""
    return DiscretePath(np.maximum.accumulate(path.values))


def dyadic_skeleton(path: GridPath, n: int) -> DiscretePath:
    """Values of the path at the 2^n + 1 dyadic times m*T/2^n.

    Raises :class:`MissingGridPoint` if the path's grid does not contain one
    of the required times exactly.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    wanted = dyadic_grid(path.horizon, n)
    idx = np.searchsorted(path.grid, wanted)
    ok = (idx < path.grid.size) & (path.grid[np.minimum(idx, path.grid.size - 1)] == wanted)
    if not np.all(ok):
        missing = wanted[~ok][0]
        raise MissingGridPoint(f"grid lacks dyadic time {missing!r} (level {n})")
    return DiscretePath(path.values[idx])


def indicator_restricted_terminal(path: DiscretePath | GridPath, alpha: float) -> float:
    """Per-path integrand of the restricted expectation E[X_N; max X >= alpha].

    Returns the terminal value when the path's running maximum reaches alpha
    (weak inequality), else 0.
    """
    values = path.values
    if values.max() >= alpha:
        return float(values[-1])
    return 0.0
