"""CSV input, seasonal/linear preprocessing and JSON/CSV output."""
from __future__ import annotations

import csv
import json
import math
import os
from pathlib import Path

import numpy as np

from .inference import PixelClass
from .scale_space import MIN_LENGTH, SeriesLike, TimeSeries, as_series

REPORT_FORMAT = "tsizer-report"
REPORT_VERSION = 1


def _parse_float(cell: str) -> float | None:
    try:
        v = float(cell)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def load_csv(path, column: str | int | None = None, has_header: bool | None = None) -> TimeSeries:
    """Read one column of a comma-separated file as a time series.

    ``column`` is a header name or a 0-based index (default: the last
    column).  When ``has_header`` is None a header is assumed if the first
    row's selected cell is not a number.  Row order is the time order.
    Errors name the offending file row (1-based, header included).
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh)]
    numbered = [(i + 1, r) for i, r in enumerate(rows) if any(c.strip() for c in r)]
    if not numbered:
        raise ValueError(f"{path}: file is empty")

    first = [c.strip() for c in numbered[0][1]]
    if isinstance(column, str) and not column.lstrip("-").isdigit():
        if has_header is False:
            raise ValueError(f"{path}: column name {column!r} given but file has no header")
        if column not in first:
            raise ValueError(f"{path}: column {column!r} not in header {first}")
        col, has_header = first.index(column), True
    else:
        col = len(first) - 1 if column is None else int(column)
        if has_header is None:
            has_header = _parse_float(first[col]) is None if col < len(first) else False

    body = numbered[1:] if has_header else numbered
    values = []
    for lineno, row in body:
        if col >= len(row) or col < -len(row):
            raise ValueError(f"{path}: row {lineno} has no column {col}")
        v = _parse_float(row[col].strip())
        if v is None:
            raise ValueError(f"{path}: row {lineno}: cannot parse {row[col]!r} as a finite number")
        values.append(v)
    if len(values) < MIN_LENGTH:
        raise ValueError(f"{path}: series has {len(values)} values, need at least {MIN_LENGTH}")
    return TimeSeries(np.array(values))


def write_series_csv(path, values, header: str = "value") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for v in np.asarray(values, dtype=float):
            fh.write(repr(float(v)) + "\n")


# --------------------------------------------------------------------------
# Preprocessing

def _phase_design(n: int, period: int) -> np.ndarray:
    phase = np.arange(n) % period
    return (phase[:, None] == np.arange(period)[None, :]).astype(float)


def deseasonalize(series: SeriesLike, period: int = 12) -> TimeSeries:
    """Subtract from each value the mean of all values in the same phase."""
    y = as_series(series).values
    n = y.size
    if period < 2:
        raise ValueError(f"period must be >= 2, got {period}")
    if n < 2 * period:
        raise ValueError(f"need at least two full periods ({2 * period} values), got {n}")
    phase = np.arange(n) % period
    means = np.bincount(phase, weights=y, minlength=period) / np.bincount(phase, minlength=period)
    return TimeSeries(y - means[phase])


def linear_detrend(series: SeriesLike) -> TimeSeries:
    """Subtract the ordinary least-squares line fitted against the time index."""
    y = as_series(series).values
    t = np.arange(1, y.size + 1, dtype=float)
    tc = t - t.mean()
    slope = np.dot(tc, y - y.mean()) / np.dot(tc, tc)
    return TimeSeries(y - y.mean() - slope * tc)


def preprocess(series: SeriesLike, period: int | None = None, detrend: bool = False) -> TimeSeries:
    """Apply the requested seasonal and/or linear adjustment.

    With both requested the phase means and the line are removed jointly
    (one least-squares projection), so the output has zero phase means,
    zero slope, and a second application changes nothing.
    """
    y = as_series(series)
    if period is None:
        return linear_detrend(y) if detrend else y
    if not detrend:
        return deseasonalize(y, period)
    deseasonalize(y, period)  # argument validation
    n = y.n
    t = np.arange(1, n + 1, dtype=float)
    X = np.column_stack([_phase_design(n, period), t - t.mean()])
    beta, *_ = np.linalg.lstsq(X, y.values, rcond=None)
    return TimeSeries(y.values - X @ beta)


# --------------------------------------------------------------------------
# Report serialization

def _floats(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def report_to_dict(report) -> dict:
    meta = dict(report.meta)
    meta.update({
        "n": report.series.n,
        "alpha": report.alpha,
        "kernel": {"shape": report.kernel.shape, "radius": report.kernel.radius},
        "codes": {c.name.lower(): int(c) for c in PixelClass},
    })
    pilots = []
    for k, p in enumerate(report.pilots, start=1):
        pilots.append({
            "index": k,
            "h_p": p.h_p,
            "ir": p.ir,
            "ss": p.residuals.ss,
            "n_star": p.dep.n_star,
            "n_star_clamped": bool(p.dep.clamped),
            "map": None if p.map is None else np.asarray(p.map.classes, dtype=int).tolist(),
        })
    return {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "meta": meta,
        "series": _floats(report.series.values),
        "trend": None if report.trend is None else _floats(report.trend),
        "grid": _floats(report.grid.bandwidths),
        "family": {"level": _floats(report.family.level), "slope": _floats(report.family.slope)},
        "pilots": pilots,
        "selection": {
            "chosen": list(report.selection.chosen),
            "mode": report.selection.mode,
            "targets": list(report.selection.targets),
        },
    }


def export_report(report, path) -> None:
    """Write the report as JSON (floats in shortest round-trip form)."""
    doc = report_to_dict(report)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, separators=(",", ":"), allow_nan=False)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write report to {os.fspath(path)}: {exc}") from exc


def read_report(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise OSError(f"cannot read report {os.fspath(path)}: {exc}") from exc
    if doc.get("format") != REPORT_FORMAT:
        raise ValueError(f"{path}: not a {REPORT_FORMAT} document")
    return doc


STUDY_COLUMNS = ("rank", "type1_mean", "type1_median", "type1_max", "type1_min",
                 "power_mean", "power_median", "power_max", "power_min")


def write_study_table(path, rows: list[dict], label: str = "") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(("noise",) + STUDY_COLUMNS) + "\n")
        for row in rows:
            cells = [label, row["rank"]] + [f"{row[c]:.6f}" for c in STUDY_COLUMNS[1:]]
            fh.write(",".join(cells) + "\n")
