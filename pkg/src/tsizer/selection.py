"""Residual-share statistic over the pilots and the choice of four of them.

Pilot indices are 1-based throughout, matching how the maps are labelled
(``hp(1)`` is the smallest pilot bandwidth).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MODES = ("first-plot", "robust")
BASE_TARGETS = (0.25, 0.50, 0.75)
_TIE_TOL = 1e-12


AFFINE_RTOL = 1e-24


class AffineSeriesError(ValueError):
    """Every pilot fits the data exactly, so there is no trade-off to show."""


@dataclass(frozen=True)
class SelectionResult:
    chosen: tuple[int, ...]
    mode: str
    targets: tuple[float, ...]


def compute_ir(ss, scale: float = 0.0) -> np.ndarray:
    """IR = ss / max(ss).

    ``scale`` (typically the sum of squared data) sets the rounding floor:
    residual sums below ``AFFINE_RTOL * scale`` count as zero.
    """
    ss = np.asarray(ss, dtype=float)
    if ss.ndim != 1 or ss.size == 0 or np.any(ss < 0) or not np.all(np.isfinite(ss)):
        raise ValueError("residual sums of squares must be finite and nonnegative")
    top = ss.max()
    if not top > AFFINE_RTOL * scale:
        raise AffineSeriesError("all pilot residuals are zero: the series is exactly affine")
    return ss / top


def _nearest(ir: np.ndarray, target: float, allowed: list[int]) -> int:
    """1-based index of the allowed entry nearest ``target``; ties go low."""
    best, best_d = None, np.inf
    for idx in allowed:
        d = abs(ir[idx - 1] - target)
        if d < best_d - _TIE_TOL:
            best, best_d = idx, d
    return best


def select_pilots(ir, mode: str = "robust") -> SelectionResult:
    """Pick four pilots spreading the trend/dependence trade-off.

    ``first-plot`` always keeps pilot 1 and adds the pilots whose IR is
    nearest 25%, 50% and 75%.  ``robust`` anchors at pilot 2 instead (pilot 1
    tends to overfit) and never uses pilot 1; when pilot 2 is itself nearest
    25%, the remaining targets are placed at 25/50/75% of the way from
    ``IR(2)`` to ``IR(last)``.  A target whose nearest pilot is taken falls
    back to the next-nearest unused one.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    ir = np.asarray(ir, dtype=float)
    m = ir.size
    if m < 5:
        raise ValueError(f"need at least 5 pilots to choose 4, got {m}")
    if np.any(~np.isfinite(ir)) or np.any(ir < 0) or np.any(ir > 1 + 1e-12):
        raise ValueError("IR values must lie in [0, 1]")

    if mode == "first-plot":
        anchor, pool = 1, list(range(1, m + 1))
        targets = BASE_TARGETS
    else:
        anchor, pool = 2, list(range(2, m + 1))
        targets = BASE_TARGETS
        if _nearest(ir, BASE_TARGETS[0], pool) == anchor:
            lo, hi = ir[1], ir[m - 1]
            targets = tuple(lo + t * (hi - lo) for t in BASE_TARGETS)

    chosen = [anchor]
    for t in targets:
        free = [i for i in pool if i not in chosen]
        chosen.append(_nearest(ir, t, free))
    return SelectionResult(chosen=tuple(sorted(chosen)), mode=mode,
                           targets=tuple(float(t) for t in targets))
