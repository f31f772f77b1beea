"""Error-process estimates: pilot residuals, autocovariance, slope variance, n*."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .scale_space import (GAUSSIAN, BandwidthGrid, Kernel, SeriesLike, _check_det,
                          _moments, _row_arrays, as_series, ess, smoother_matrices)

log = logging.getLogger(__name__)

NEG_VARIANCE_TOL = 1e-12
MIN_LENGTH_NSTAR = 16


class InternalError(RuntimeError):
    pass


@dataclass(frozen=True)
class ResidualSeries:
    residuals: np.ndarray
    pilot_bandwidth: float
    ss: float

    @property
    def n(self) -> int:
        return self.residuals.size


@dataclass(frozen=True)
class AutocovFn:
    """Autocovariance at lags ``0..n-1`` in squared observation units."""

    gamma: np.ndarray

    def __len__(self) -> int:
        return self.gamma.size

    def scaled(self, c: float) -> "AutocovFn":
        return AutocovFn(self.gamma * c)


@dataclass(frozen=True)
class DependenceEstimate:
    autocov: AutocovFn
    n_star: float
    clamped: bool = False


def pilot_residuals(series: SeriesLike, h_p: float, kernel: Kernel = GAUSSIAN) -> ResidualSeries:
    y = as_series(series).values
    level, _ = _row_arrays(y, h_p, kernel)
    e = y - level
    return ResidualSeries(residuals=e, pilot_bandwidth=float(h_p), ss=float(np.dot(e, e)))


def sample_autocov(res, max_lag: int | None = None) -> AutocovFn:
    """Mean-centred autocovariance with the biased ``1/n`` divisor.

    ``res`` is a :class:`ResidualSeries` or a plain sequence.  Lags above
    ``max_lag`` are set to zero.
    """
    e = np.asarray(res.residuals if isinstance(res, ResidualSeries) else res, dtype=float)
    n = e.size
    if n < 2:
        raise ValueError("autocovariance needs at least two observations")
    x = e - e.mean()
    m = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, m)
    g = np.fft.irfft(f.real ** 2 + f.imag ** 2, m)[:n] / n
    if max_lag is not None:
        g[max_lag + 1:] = 0.0
    return AutocovFn(g)


def _clamp_variance(v: float) -> float:
    if v < -NEG_VARIANCE_TOL:
        raise InternalError(f"negative slope variance {v:.3e}")
    return max(v, 0.0)


def sandwich_slope_variance(n: int, i0: int, h: float, kernel: Kernel,
                            autocov: AutocovFn) -> float:
    """Slope entry of ``A^-1 (X' S X) A^-1`` with ``A = X'WX``.

    ``S[i, j] = gamma(|i-j|) K_h(i-i0) K_h(j-i0)``; only the truncated kernel
    window contributes, so the cost is quadratic in the window width.
    """
    if not 1 <= i0 <= n:
        raise ValueError(f"location {i0} outside 1..{n}")
    r = kernel.half_width(h)
    lo, hi = max(1, i0 - r), min(n, i0 + r)
    d = np.arange(lo, hi + 1, dtype=float) - i0
    w = kernel(d, h)
    s0, s1, s2, det = _moments(w, d)
    _check_det(s0, s2, det, h, [i0])
    # Slope row of A^-1 X'W, restricted to the window.
    ell = w * (s0 * d - s1) / det
    lags = np.abs(np.subtract.outer(np.arange(d.size), np.arange(d.size)))
    g = np.asarray(autocov.gamma, dtype=float)
    gw = np.zeros(d.size)
    k = min(d.size, g.size)
    gw[:k] = g[:k]
    v = float(ell @ gw[lags] @ ell)
    return _clamp_variance(v)


def slope_variance_operator(n: int, h: float, kernel: Kernel = GAUSSIAN) -> np.ndarray:
    """Matrix ``R`` with ``R @ gamma`` equal to the sandwich slope variance row.

    Row ``i0 - 1`` holds the lag autocorrelations of the slope equivalent
    kernel at ``i0`` (doubled for positive lags), so one operator serves every
    autocovariance estimate on the same ``(n, h, kernel)``.
    """
    _, slope_w = smoother_matrices(n, h, kernel)
    m = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(slope_w, m, axis=1)
    c = np.fft.irfft(f.real ** 2 + f.imag ** 2, m, axis=1)[:, :n]
    c[:, 1:] *= 2.0
    return c


def slope_variance_operators(n: int, grid: BandwidthGrid, kernel: Kernel = GAUSSIAN) -> np.ndarray:
    return np.stack([slope_variance_operator(n, h, kernel) for h in grid])


def apply_variance_operator(op: np.ndarray, autocov: AutocovFn) -> np.ndarray:
    g = np.asarray(autocov.gamma, dtype=float)
    n = op.shape[-1]
    gn = np.zeros(n)
    gn[:min(n, g.size)] = g[:n]
    v = op @ gn
    # FFT round-off scales with the lag-0 term, not with an absolute unit.
    tol = 1e-9 * np.abs(op[..., 0]) * abs(gn[0])
    if np.any(v < -tol - NEG_VARIANCE_TOL):
        raise InternalError(f"negative slope variance {float(v.min()):.3e}")
    return np.maximum(v, 0.0)


def grouped_mean_variance(x, p: int) -> float:
    """Variance of the overall mean from ``p`` consecutive block means.

    Blocks have ``len(x) // p`` points; the remainder joins the last block.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if p < 2:
        raise ValueError(f"need at least 2 groups, got p={p}")
    if n < 2 * p:
        raise ValueError(f"need n >= 2p, got n={n}, p={p}")
    size = n // p
    edges = [j * size for j in range(p)] + [n]
    means = np.array([x[edges[j]:edges[j + 1]].mean() for j in range(p)])
    return float(((means - means.mean()) ** 2).sum() / (p * (p - 1)))


def estimate_n_star(res: ResidualSeries) -> DependenceEstimate:
    """Information-equivalent sample size from one pilot's residuals."""
    e = res.residuals
    n = e.size
    if n < MIN_LENGTH_NSTAR:
        raise ValueError(f"n* estimation needs n >= {MIN_LENGTH_NSTAR}, got {n}")
    acv = sample_autocov(e)
    var_mean = grouped_mean_variance(e, int(math.isqrt(n)))
    ceiling = 10.0 * n
    if not var_mean > 0:
        log.warning("grouped variance of residuals is zero; n* set to %g", ceiling)
        return DependenceEstimate(acv, ceiling, clamped=True)
    raw = acv.gamma[0] / var_mean
    n_star = min(max(raw, 1.0), ceiling)
    return DependenceEstimate(acv, float(n_star), clamped=n_star != raw)


def ess_star(i0, h: float, n: int, n_star: float, kernel: Kernel = GAUSSIAN):
    if not n_star > 0:
        raise ValueError("n_star must be positive")
    return (n_star / n) * ess(i0, h, n, kernel)
