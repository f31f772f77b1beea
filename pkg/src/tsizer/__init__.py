"""Scale-space significance of trends in time series with correlated errors."""
from .dependence import (AutocovFn, DependenceEstimate, ResidualSeries, ess_star,
                         estimate_n_star, grouped_mean_variance, pilot_residuals,
                         sample_autocov, sandwich_slope_variance)
from .inference import (PixelClass, SiZerMap, build_map, classify_pixel, independent_blocks,
                        normal_quantile, quantile_q)
from .pipeline import AnalysisReport, PilotAnalysis, analyze
from .scale_space import (GAUSSIAN, UNIFORM, BandwidthGrid, DegenerateFitError, Kernel,
                          LocalFit, TimeSeries, ess, fit_row, fit_scale_space,
                          local_linear_fit, make_bandwidth_grid)
from .selection import SelectionResult, compute_ir, select_pilots

__version__ = "0.1.0"
