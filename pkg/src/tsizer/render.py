"""SVG panel and ASCII rendering of an analysis report.

The SVG is assembled as plain text so that identical reports give
byte-identical documents.  Map pixels are written as horizontal runs; each
run carries ``data-row``/``data-start``/``data-len``/``data-class``
attributes so the class grid can be read back from the document.
"""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .inference import PixelClass

COLORS = {
    PixelClass.UP: "#000000",
    PixelClass.DOWN: "#FFFFFF",
    PixelClass.FLAT: "#808080",
    PixelClass.SPARSE: "#404040",
}
ASCII_CHARS = {PixelClass.UP: "#", PixelClass.DOWN: ".", PixelClass.FLAT: "-", PixelClass.SPARSE: "?"}
MAX_COLUMNS = 2000
HIGHLIGHT = "#D62728"
PLAIN_BAR = "#A0A0A0"

PANEL_W, PANEL_H, PAD, TITLE_H = 240.0, 150.0, 16.0, 18.0


def pool_columns(classes: np.ndarray, max_cols: int = MAX_COLUMNS) -> np.ndarray:
    """Majority-pool map columns down to at most ``max_cols``.

    Ties go to the smaller class code.  Maps already narrow enough are
    returned unchanged.
    """
    classes = np.asarray(classes)
    n = classes.shape[1]
    if n <= max_cols:
        return classes
    block = -(-n // max_cols)
    cols = []
    for start in range(0, n, block):
        chunk = classes[:, start:start + block]
        counts = np.stack([(chunk == c).sum(axis=1) for c in PixelClass], axis=1)
        cols.append(np.argmax(counts, axis=1))
    return np.stack(cols, axis=1).astype(classes.dtype)


def ascii_map(classes: np.ndarray, max_cols: int = MAX_COLUMNS) -> str:
    """One text line per bandwidth, coarsest bandwidth first."""
    grid = pool_columns(classes, max_cols)
    lines = ["".join(ASCII_CHARS[PixelClass(int(c))] for c in row) for row in grid[::-1]]
    return "\n".join(lines)


def parse_ascii_map(text: str) -> np.ndarray:
    lookup = {ch: int(c) for c, ch in ASCII_CHARS.items()}
    rows = [[lookup[ch] for ch in line] for line in text.strip("\n").splitlines()]
    return np.array(rows[::-1], dtype=np.int8)


def _f(x: float) -> str:
    return f"{x:.2f}"


class _Canvas:
    def __init__(self, width: float, height: float):
        self.width, self.height = width, height
        self.parts: list[str] = []

    def add(self, s: str) -> None:
        self.parts.append(s)

    def text(self, x, y, s, size=10, anchor="middle"):
        self.add(f'<text x="{_f(x)}" y="{_f(y)}" font-size="{size}" '
                 f'text-anchor="{anchor}" font-family="sans-serif">{escape(s)}</text>')

    def frame(self, x, y, w, h):
        self.add(f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" '
                 'fill="none" stroke="#000000" stroke-width="0.5"/>')

    def document(self) -> str:
        head = ('<?xml version="1.0" encoding="UTF-8"?>\n'
                f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(self.width)}" '
                f'height="{_f(self.height)}" viewBox="0 0 {_f(self.width)} {_f(self.height)}">\n'
                f'<rect x="0" y="0" width="{_f(self.width)}" height="{_f(self.height)}" fill="#FFFFFF"/>\n')
        return head + "\n".join(self.parts) + "\n</svg>\n"


def _scaler(lo, hi, a, b):
    span = hi - lo if hi > lo else 1.0
    return lambda v: a + (np.asarray(v, dtype=float) - lo) / span * (b - a)


def _line_panel(cv: _Canvas, x0, y0, title, curves, dots=None):
    """Axes box with optional scatter ``dots`` and polyline ``curves``.

    ``curves`` is a list of ``(values, colour, width)``.
    """
    cv.text(x0 + PANEL_W / 2, y0 + 12, title)
    top = y0 + TITLE_H
    h = PANEL_H - TITLE_H
    cv.frame(x0, top, PANEL_W, h)
    series = [c[0] for c in curves] + ([dots] if dots is not None else [])
    lo = min(float(np.min(s)) for s in series)
    hi = max(float(np.max(s)) for s in series)
    n = len(series[0])
    sx = _scaler(1, n, x0 + 2, x0 + PANEL_W - 2)
    sy = _scaler(lo, hi, top + h - 3, top + 3)
    xs = sx(np.arange(1, n + 1))
    if dots is not None:
        pts = "".join(f'<circle cx="{_f(a)}" cy="{_f(b)}" r="0.8"/>' for a, b in zip(xs, sy(dots)))
        cv.add(f'<g fill="#1F77B4">{pts}</g>')
    for values, colour, width in curves:
        pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in zip(xs, sy(values)))
        cv.add(f'<polyline fill="none" stroke="{colour}" stroke-width="{width}" points="{pts}"/>')


def _bar_panel(cv: _Canvas, x0, y0, ir, chosen):
    cv.text(x0 + PANEL_W / 2, y0 + 12, "IR by pilot")
    top = y0 + TITLE_H
    h = PANEL_H - TITLE_H
    cv.frame(x0, top, PANEL_W, h)
    m = len(ir)
    bw = (PANEL_W - 4) / m
    cv.add('<g class="ir-bars">')
    for k, v in enumerate(ir, start=1):
        bh = float(v) * (h - 14)
        on = k in chosen
        cv.add(f'<rect class="{"ir-bar selected" if on else "ir-bar"}" data-pilot="{k}" '
               f'x="{_f(x0 + 2 + (k - 1) * bw + 1)}" y="{_f(top + h - 12 - bh)}" '
               f'width="{_f(bw - 2)}" height="{_f(bh)}" fill="{HIGHLIGHT if on else PLAIN_BAR}"/>')
        cv.text(x0 + 2 + (k - 0.5) * bw, top + h - 2, str(k), size=7)
    cv.add("</g>")


def _map_panel(cv: _Canvas, x0, y0, title, classes, pilot):
    cv.text(x0 + PANEL_W / 2, y0 + 12, title)
    top = y0 + TITLE_H
    h = PANEL_H - TITLE_H
    grid = pool_columns(classes)
    rows, cols = grid.shape
    pw, ph = PANEL_W / cols, h / rows
    cv.add(f'<g class="sizer-map" data-pilot="{pilot}" data-rows="{rows}" data-cols="{cols}" '
           'shape-rendering="crispEdges">')
    for r in range(rows):
        # Row 0 is the finest bandwidth and sits at the bottom.
        y = top + (rows - 1 - r) * ph
        row = grid[r]
        start = 0
        for c in range(1, cols + 1):
            if c == cols or row[c] != row[start]:
                cls = PixelClass(int(row[start]))
                cv.add(f'<rect data-row="{r}" data-start="{start}" data-len="{c - start}" '
                       f'data-class="{int(cls)}" x="{_f(x0 + start * pw)}" y="{_f(y)}" '
                       f'width="{_f((c - start) * pw)}" height="{_f(ph)}" fill="{COLORS[cls]}"/>')
                start = c
    cv.add("</g>")
    cv.frame(x0, top, PANEL_W, h)


def render_panel(report) -> str:
    """Four-row SVG summary of a report.

    Row 1 holds the data (with the known trend when present), the family
    of smooths and the IR bar chart; rows 2 to 4 hold, per chosen pilot, the
    pilot smooth, its residuals and its SiZer map (log bandwidth upwards).
    """
    chosen = list(report.selection.chosen)
    missing = [k for k in chosen if report.pilots[k - 1].map is None]
    if missing:
        raise ValueError(f"report has no map for chosen pilots {missing}")
    ncol = max(len(chosen), 3)
    width = ncol * PANEL_W + (ncol + 1) * PAD
    height = 4 * PANEL_H + 5 * PAD
    cv = _Canvas(width, height)
    y = report.series.values

    def pos(col, row):
        return PAD + col * (PANEL_W + PAD), PAD + row * (PANEL_H + PAD)

    trend = [] if report.trend is None else [(report.trend, "#D62728", 1.2)]
    _line_panel(cv, *pos(0, 0), "Data", trend, dots=y)
    family = [(row, "#2C2C2C", 0.6) for row in report.family.level]
    _line_panel(cv, *pos(1, 0), "Family of smooths", family, dots=y)
    _bar_panel(cv, *pos(2, 0), [p.ir for p in report.pilots], chosen)

    for col, k in enumerate(chosen):
        p = report.pilots[k - 1]
        smooth = y - p.residuals.residuals
        _line_panel(cv, *pos(col, 1), f"hp({k}) = {p.h_p:.3g} smooth",
                    [(smooth, "#D62728", 1.0)], dots=y)
        _line_panel(cv, *pos(col, 2), f"hp({k}) residuals, IR = {p.ir:.2f}",
                    [(p.residuals.residuals, "#1F77B4", 0.6)])
        _map_panel(cv, *pos(col, 3), f"SiZer hp({k}), n* = {p.dep.n_star:.4g}",
                   p.map.classes, k)
    return cv.document()


def parse_svg_maps(svg: str) -> dict[int, np.ndarray]:
    """Recover the class grid of each map panel from a rendered document."""
    import xml.etree.ElementTree as ET

    ns = "{http://www.w3.org/2000/svg}"
    root = ET.fromstring(svg.encode("utf-8"))
    out = {}
    for g in root.iter(f"{ns}g"):
        if g.get("class") != "sizer-map":
            continue
        grid = np.full((int(g.get("data-rows")), int(g.get("data-cols"))), -1, dtype=np.int8)
        for rect in g.iter(f"{ns}rect"):
            r, s, ln = (int(rect.get(a)) for a in ("data-row", "data-start", "data-len"))
            grid[r, s:s + ln] = int(rect.get("data-class"))
        out[int(g.get("data-pilot"))] = grid
    return out
