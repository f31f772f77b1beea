"""Simultaneous quantiles, pixel classification and SiZer map assembly."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .dependence import DependenceEstimate, apply_variance_operator, slope_variance_operator
from .scale_space import (GAUSSIAN, BandwidthGrid, Kernel, ScaleSpaceFit, SeriesLike,
                          as_series, fit_scale_space)

SPARSE_ESS = 5.0


class PixelClass(enum.IntEnum):
    """Map classes; the integer values are the serialized pixel codes."""

    UP = 0
    DOWN = 1
    FLAT = 2
    SPARSE = 3


# Acklam's rational approximation to the inverse normal CDF (relative error
# below 1.15e-9), followed by one Halley step against the exact CDF.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _poly(coef, x):
    out = np.zeros_like(x)
    for c in coef:
        out = out * x + c
    return out


def _lower_tail_ppf(p):
    """Inverse CDF for ``0 < p <= 0.5`` (result is <= 0)."""
    x = np.empty_like(p)
    tail = p < _P_LOW
    if np.any(tail):
        q = np.sqrt(-2.0 * np.log(p[tail]))
        x[tail] = _poly(_C, q) / (_poly(_D, q) * q + 1.0)
    mid = ~tail
    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        x[mid] = _poly(_A, r) * q / (_poly(_B, r) * r + 1.0)
    # Halley refinement.
    e = ndtr(x) - p
    u = e * math.sqrt(2.0 * math.pi) * np.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def normal_quantile(p):
    """Standard normal quantile ``Phi^-1(p)`` for scalar or array ``p``.

    The upper half is obtained by symmetry so both tails keep full relative
    precision; after refinement ``|Phi(x) - p|`` is at round-off level.
    """
    arr = np.asarray(p, dtype=float)
    if np.any(~((arr > 0) & (arr < 1))):
        raise ValueError("probability must lie strictly between 0 and 1")
    flat = np.atleast_1d(arr).astype(float)
    upper = flat > 0.5
    lower_p = np.where(upper, 1.0 - flat, flat)
    x = _lower_tail_ppf(lower_p)
    x = np.where(upper, -x, x)
    x = np.where(flat == 0.5, 0.0, x)
    return float(x[0]) if arr.ndim == 0 else x.reshape(arr.shape)


def independent_blocks(n: int, ess_value):
    """Approximate number of independent blocks, ``n / ESS``."""
    e = np.asarray(ess_value, dtype=float)
    if np.any(e < 1):
        raise ValueError("effective sample size must be >= 1")
    out = n / e
    return float(out) if out.ndim == 0 else out


def quantile_q(l, alpha: float = 0.05):
    """Gaussian quantile for ``l`` independent simultaneous intervals.

    Computed through the upper tail ``(1 - (1 - alpha)^(1/l)) / 2`` to avoid
    cancellation when ``l`` is large.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    lv = np.asarray(l, dtype=float)
    if np.any(~(lv > 0)):
        raise ValueError("number of blocks must be positive")
    tail = -np.expm1(np.log1p(-alpha) / lv) / 2.0
    q = -normal_quantile(tail)
    return float(q) if lv.ndim == 0 else q


def classify_pixel(slope: float, sd: float, q: float, ess_star: float) -> PixelClass:
    if ess_star < SPARSE_ESS:
        return PixelClass.SPARSE
    if slope - q * sd > 0:
        return PixelClass.UP
    if slope + q * sd < 0:
        return PixelClass.DOWN
    return PixelClass.FLAT


def classify(slope, sd, q, ess_star) -> np.ndarray:
    """Vectorized :func:`classify_pixel`; returns integer pixel codes."""
    slope, sd, q, ess_star = np.broadcast_arrays(*(np.asarray(a, dtype=float)
                                                  for a in (slope, sd, q, ess_star)))
    out = np.full(slope.shape, PixelClass.FLAT, dtype=np.int8)
    out[slope + q * sd < 0] = PixelClass.DOWN
    out[slope - q * sd > 0] = PixelClass.UP
    out[ess_star < SPARSE_ESS] = PixelClass.SPARSE
    return out


@dataclass(frozen=True)
class SiZerMap:
    """Classified scale-space grid; row ``k`` corresponds to ``grid[k]``."""

    grid: BandwidthGrid
    classes: np.ndarray
    slope: np.ndarray
    sd: np.ndarray
    q: np.ndarray
    ess_star: np.ndarray

    @property
    def n(self) -> int:
        return self.classes.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.classes.shape


def _row_quantiles(ess_row: np.ndarray, n: int, alpha: float, mode: str) -> np.ndarray:
    if mode == "pixel":
        base = ess_row
    elif mode == "row":
        # One quantile per bandwidth from the best-supported location.
        base = np.full_like(ess_row, ess_row.max())
    else:
        raise ValueError(f"unknown quantile mode {mode!r}")
    # ESS* above n would mean fewer than one block; pointwise is the floor.
    l = np.maximum(n / np.maximum(base, 1e-300), 1.0)
    return quantile_q(l, alpha)


def build_map(series: SeriesLike, dep: DependenceEstimate, grid: BandwidthGrid,
              alpha: float = 0.05, kernel: Kernel = GAUSSIAN, *,
              fit: ScaleSpaceFit | None = None, operators=None,
              quantile_mode: str = "pixel") -> SiZerMap:
    """Classify every (bandwidth, location) pixel under one dependence estimate.

    ``fit`` and ``operators`` (from :func:`slope_variance_operators`) may be
    passed in to share work across several pilots of the same series.
    """
    y = as_series(series)
    n = y.n
    if fit is None:
        fit = fit_scale_space(y, grid, kernel)
    slope = fit.slope
    sd = np.empty_like(slope)
    for k, h in enumerate(grid):
        op = operators[k] if operators is not None else slope_variance_operator(n, h, kernel)
        sd[k] = np.sqrt(apply_variance_operator(op, dep.autocov))
    ess_star = (dep.n_star / n) * fit.ess
    q = np.array([_row_quantiles(row, n, alpha, quantile_mode) for row in ess_star])
    return SiZerMap(grid=grid, classes=classify(slope, sd, q, ess_star),
                    slope=slope, sd=sd, q=q, ess_star=ess_star)
