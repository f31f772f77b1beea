"""Kernels, bandwidth grids and the local linear estimator.

Observations live on the unit-spaced design ``i = 1, ..., n``.  Every fit is
a kernel weighted least squares line centred at the target location, so the
intercept estimates the smoothed level and the coefficient of ``(i - i0)``
estimates the smoothed derivative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

MIN_LENGTH = 12

# Relative determinant threshold for the 2x2 normal equations.
DET_RTOL = 1e-12


class DegenerateFitError(ValueError):
    """Raised when a local fit has too little weighted spread to solve."""

    def __init__(self, message: str, i0: int | None = None, h: float | None = None):
        super().__init__(message)
        self.i0 = i0
        self.h = h


@dataclass(frozen=True)
class TimeSeries:
    """Equally spaced real observations indexed ``1..n``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.size < MIN_LENGTH:
            raise ValueError(f"series needs at least {MIN_LENGTH} observations, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise ValueError("series contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size

    def __len__(self) -> int:
        return self.values.size

    def reversed(self) -> "TimeSeries":
        return TimeSeries(self.values[::-1])


SeriesLike = Union[TimeSeries, Sequence[float], np.ndarray]


def as_series(series: SeriesLike) -> TimeSeries:
    if isinstance(series, TimeSeries):
        return series
    return TimeSeries(np.asarray(series, dtype=float))


@dataclass(frozen=True)
class Kernel:
    """Symmetric smoothing kernel, truncated at ``radius * h``.

    ``shape`` is ``"gaussian"`` (standard normal density, default radius 5)
    or ``"uniform"`` (density 1/2 on [-1, 1], default radius 1).
    """

    shape: str = "gaussian"
    radius: float | None = None

    def __post_init__(self):
        if self.shape not in ("gaussian", "uniform"):
            raise ValueError(f"unknown kernel shape {self.shape!r}")
        if self.radius is None:
            object.__setattr__(self, "radius", 5.0 if self.shape == "gaussian" else 1.0)
        if not self.radius > 0:
            raise ValueError("kernel truncation radius must be positive")

    def __call__(self, u, h: float) -> np.ndarray:
        """Scaled kernel ``K_h(u) = K(u / h) / h`` with truncation applied."""
        if not h > 0:
            raise ValueError(f"bandwidth must be positive, got {h}")
        z = np.abs(np.asarray(u, dtype=float)) / h
        if self.shape == "gaussian":
            w = np.exp(-0.5 * z * z) / (math.sqrt(2.0 * math.pi) * h)
        else:
            w = np.full(z.shape, 0.5 / h)
        # Small slack so that window edges at exact multiples of h are kept.
        return np.where(z <= self.radius * (1.0 + 1e-12), w, 0.0)

    def half_width(self, h: float) -> int:
        """Largest integer offset carrying positive weight."""
        return int(math.floor(self.radius * h * (1.0 + 1e-12)))


GAUSSIAN = Kernel("gaussian")
UNIFORM = Kernel("uniform")


@dataclass(frozen=True)
class BandwidthGrid:
    bandwidths: np.ndarray

    def __post_init__(self):
        b = np.array(self.bandwidths, dtype=float).ravel()
        if b.size < 1 or np.any(b <= 0) or np.any(np.diff(b) <= 0):
            raise ValueError("bandwidths must be positive and strictly increasing")
        b.setflags(write=False)
        object.__setattr__(self, "bandwidths", b)

    def __len__(self) -> int:
        return self.bandwidths.size

    def __iter__(self):
        return iter(self.bandwidths.tolist())

    def __getitem__(self, k):
        return self.bandwidths[k]


def make_bandwidth_grid(n: int, count: int = 11, h_min: float = 2.0,
                        h_max: float | None = None) -> BandwidthGrid:
    """Geometric grid of ``count`` bandwidths from ``h_min`` to ``h_max``.

    ``h_max`` defaults to ``n / 2``.  The count must be odd so the grid has a
    middle curve.
    """
    if h_max is None:
        h_max = n / 2.0
    if count < 3 or count % 2 == 0:
        raise ValueError(f"bandwidth count must be an odd integer >= 3, got {count}")
    if not (0 < h_min < h_max):
        raise ValueError(f"need 0 < h_min < h_max, got h_min={h_min}, h_max={h_max}")
    b = np.exp(np.linspace(math.log(h_min), math.log(h_max), count))
    b[0], b[-1] = h_min, h_max
    return BandwidthGrid(b)


@dataclass(frozen=True)
class LocalFit:
    level: float
    slope: float


def _moments(w: np.ndarray, d: np.ndarray):
    s0 = w.sum(axis=-1)
    s1 = (w * d).sum(axis=-1)
    s2 = (w * d * d).sum(axis=-1)
    det = s0 * s2 - s1 * s1
    return s0, s1, s2, det


def _check_det(s0, s2, det, h, locations):
    bad = ~(det > DET_RTOL * s0 * s2)
    if np.any(bad):
        i0 = int(np.asarray(locations)[np.argmax(bad)])
        raise DegenerateFitError(
            f"degenerate local fit at i0={i0}, h={h:g}: "
            "fewer than two distinct design points carry weight", i0=i0, h=h)


def local_linear_fit(series: SeriesLike, i0: int, h: float,
                     kernel: Kernel = GAUSSIAN) -> LocalFit:
    """Weighted least squares line at ``i0`` (1-based), solved in closed form."""
    y = as_series(series).values
    n = y.size
    if not 1 <= i0 <= n:
        raise ValueError(f"location {i0} outside 1..{n}")
    d = np.arange(1, n + 1, dtype=float) - i0
    w = kernel(d, h)
    s0, s1, s2, det = _moments(w, d)
    _check_det(s0, s2, det, h, [i0])
    t0 = np.dot(w, y)
    t1 = np.dot(w * d, y)
    level = (s2 * t0 - s1 * t1) / det
    slope = (s0 * t1 - s1 * t0) / det
    return LocalFit(float(level), float(slope))


def _offsets(n: int) -> np.ndarray:
    idx = np.arange(n, dtype=float)
    return idx[None, :] - idx[:, None]


def smoother_matrices(n: int, h: float, kernel: Kernel = GAUSSIAN):
    """Equivalent-kernel matrices of the local linear fit at every location.

    Returns ``(level_weights, slope_weights)``, each ``n x n``; row ``i0 - 1``
    holds the weights that map the data vector to the level (or slope)
    estimate at ``i0``.
    """
    d = _offsets(n)
    w = kernel(d, h)
    s0, s1, s2, det = _moments(w, d)
    _check_det(s0, s2, det, h, np.arange(1, n + 1))
    level_w = w * (s2[:, None] - s1[:, None] * d) / det[:, None]
    slope_w = w * (s0[:, None] * d - s1[:, None]) / det[:, None]
    return level_w, slope_w


def fit_row(series: SeriesLike, h: float, kernel: Kernel = GAUSSIAN) -> list[LocalFit]:
    """Local linear fits at every location for one bandwidth."""
    level, slope = _row_arrays(as_series(series).values, h, kernel)
    return [LocalFit(float(a), float(b)) for a, b in zip(level, slope)]


def _row_arrays(y: np.ndarray, h: float, kernel: Kernel):
    n = y.size
    d = _offsets(n)
    w = kernel(d, h)
    s0, s1, s2, det = _moments(w, d)
    _check_det(s0, s2, det, h, np.arange(1, n + 1))
    t0 = w @ y
    t1 = (w * d) @ y
    return (s2 * t0 - s1 * t1) / det, (s0 * t1 - s1 * t0) / det


def ess(i0, h: float, n: int, kernel: Kernel = GAUSSIAN):
    """Effective sample size: kernel mass in the window over the peak weight.

    ``i0`` may be a scalar or an array of 1-based locations.
    """
    loc = np.asarray(i0, dtype=float)
    idx = np.arange(1, n + 1, dtype=float)
    w = kernel(loc[..., None] - idx, h)
    out = w.sum(axis=-1) / kernel(0.0, h)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ScaleSpaceFit:
    """Level, slope and ESS over a whole bandwidth grid (rows follow the grid)."""

    grid: BandwidthGrid
    level: np.ndarray
    slope: np.ndarray
    ess: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.level.shape[1]


def fit_scale_space(series: SeriesLike, grid: BandwidthGrid,
                    kernel: Kernel = GAUSSIAN) -> ScaleSpaceFit:
    y = as_series(series).values
    n = y.size
    rows = [_row_arrays(y, h, kernel) for h in grid]
    locs = np.arange(1, n + 1)
    return ScaleSpaceFit(
        grid=grid,
        level=np.array([r[0] for r in rows]),
        slope=np.array([r[1] for r in rows]),
        ess=np.array([ess(locs, h, n, kernel) for h in grid]),
    )
