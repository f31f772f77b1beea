"""End-to-end analysis of one series over every pilot bandwidth."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dependence import (DependenceEstimate, ResidualSeries, estimate_n_star,
                         pilot_residuals, slope_variance_operators)
from .inference import SiZerMap, build_map
from .scale_space import (GAUSSIAN, BandwidthGrid, Kernel, ScaleSpaceFit, SeriesLike,
                          TimeSeries, as_series, fit_scale_space, make_bandwidth_grid)
from .selection import SelectionResult, compute_ir, select_pilots


@dataclass(frozen=True)
class PilotAnalysis:
    h_p: float
    residuals: ResidualSeries
    dep: DependenceEstimate
    map: SiZerMap | None
    ir: float


@dataclass(frozen=True)
class AnalysisReport:
    series: TimeSeries
    grid: BandwidthGrid
    family: ScaleSpaceFit
    pilots: tuple[PilotAnalysis, ...]
    selection: SelectionResult
    alpha: float
    kernel: Kernel = GAUSSIAN
    meta: dict = field(default_factory=dict)
    trend: np.ndarray | None = None

    @property
    def selected(self) -> list[PilotAnalysis]:
        return [self.pilots[i - 1] for i in self.selection.chosen]


class Workspace:
    """Caches the data-independent parts of the analysis for a given ``n``.

    The slope variance operators depend only on ``(n, grid, kernel)``; a
    simulation study reuses one workspace across all replications.
    """

    def __init__(self, n: int, grid: BandwidthGrid, kernel: Kernel = GAUSSIAN):
        self.n = n
        self.grid = grid
        self.kernel = kernel
        self._ops = None

    @property
    def operators(self) -> np.ndarray:
        if self._ops is None:
            self._ops = slope_variance_operators(self.n, self.grid, self.kernel)
        return self._ops


def analyze(series: SeriesLike, grid: BandwidthGrid | None = None, alpha: float = 0.05,
            kernel: Kernel = GAUSSIAN, mode: str = "robust", *,
            pilot_grid: BandwidthGrid | None = None, maps: str = "all",
            quantile_mode: str = "pixel", workspace: Workspace | None = None,
            meta: dict | None = None, trend=None) -> AnalysisReport:
    """Run every pilot, compute IR, choose four pilots and build their maps.

    ``maps="all"`` builds a map for each pilot, ``maps="selected"`` only for
    the four chosen ones (the others keep ``map=None``).
    """
    y = as_series(series)
    n = y.n
    if grid is None:
        grid = make_bandwidth_grid(n)
    if pilot_grid is None:
        pilot_grid = grid
    if maps not in ("all", "selected"):
        raise ValueError(f"maps must be 'all' or 'selected', got {maps!r}")
    if workspace is None or workspace.n != n or workspace.grid is not grid:
        workspace = Workspace(n, grid, kernel)

    family = fit_scale_space(y, grid, kernel)
    residuals = [pilot_residuals(y, hp, kernel) for hp in pilot_grid]
    ir = compute_ir([r.ss for r in residuals], scale=float(np.dot(y.values, y.values)))
    selection = select_pilots(ir, mode)

    pilots = []
    for k, (hp, res) in enumerate(zip(pilot_grid, residuals), start=1):
        dep = estimate_n_star(res)
        smap = None
        if maps == "all" or k in selection.chosen:
            smap = build_map(y, dep, grid, alpha, kernel, fit=family,
                             operators=workspace.operators, quantile_mode=quantile_mode)
        pilots.append(PilotAnalysis(h_p=float(hp), residuals=res, dep=dep, map=smap,
                                    ir=float(ir[k - 1])))
    return AnalysisReport(series=y, grid=grid, family=family, pilots=tuple(pilots),
                          selection=selection, alpha=alpha, kernel=kernel,
                          meta=dict(meta or {}),
                          trend=None if trend is None else np.asarray(trend, dtype=float))
