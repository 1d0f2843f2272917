"""Convergence tables as CSV and minimal semilog SVG charts."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

__all__ = ["CSV_HEADER", "ConvergenceReport", "ConvergenceRow", "semilog_svg"]

CSV_HEADER = ("N", "error_inf", "error_2", "solve_seconds", "condition_estimate")


def _fmt(v) -> str:
    return "{:.17g}".format(v)


@dataclass(frozen=True)
class ConvergenceRow:
    N: int
    error_inf: float
    error_2: float
    solve_seconds: float
    condition_estimate: float

    def __post_init__(self):
        if not (self.error_inf >= 0.0 and self.error_2 >= 0.0):
            raise ValueError(f"errors must be nonnegative, got {self.error_inf}, {self.error_2}")


@dataclass
class ConvergenceReport:
    name: str
    rows: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([r.N, _fmt(r.error_inf), _fmt(r.error_2), _fmt(r.solve_seconds),
                        _fmt(r.condition_estimate)])
        return buf.getvalue()

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_csv())
        return path

    @classmethod
    def from_csv(cls, text: str, name: str = "") -> ConvergenceReport:
        rd = csv.reader(io.StringIO(text))
        header = tuple(next(rd))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header {header}")
        rows = [ConvergenceRow(int(r[0]), *map(float, r[1:])) for r in rd if r]
        return cls(name, rows)

    def write_svg(self, path) -> Path:
        path = Path(path)
        series = {"error_inf": [(r.N, r.error_inf) for r in self.rows],
                  "error_2": [(r.N, r.error_2) for r in self.rows]}
        path.write_text(semilog_svg(series, title=self.name, xlabel="N", ylabel="error"))
        return path

    def error(self, N: int) -> float:
        for r in self.rows:
            if r.N == N:
                return r.error_inf
        raise KeyError(N)


COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def semilog_svg(series: dict, title: str = "", xlabel: str = "", ylabel: str = "",
                width: int = 560, height: int = 400) -> str:
    """Line chart with a log10 y axis; nonpositive values are dropped."""
    pts = {k: [(x, y) for x, y in v if y > 0 and math.isfinite(y)] for k, v in series.items()}
    xs = [x for v in pts.values() for x, _ in v] or [0, 1]
    ys = [math.log10(y) for v in pts.values() for _, y in v] or [0, 1]
    x0, x1 = min(xs), max(xs)
    if x1 == x0:
        x1 = x0 + 1
    y0, y1 = math.floor(min(ys)), math.ceil(max(ys))
    if y1 == y0:
        y1 = y0 + 1
    left, right, top, bottom = 70, 20, 40, 50
    pw, ph = width - left - right, height - top - bottom

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(ly):
        return top + (y1 - ly) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="12">',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    step = max(1, (y1 - y0) // 10)
    for e in range(y0, y1 + 1, step):
        y = py(e)
        out.append(f'<line x1="{left}" y1="{y:.1f}" x2="{left + pw}" y2="{y:.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 6}" y="{y + 4:.1f}" text-anchor="end">1e{e}</text>')
    for x in sorted(set(xs)):
        out.append(f'<text x="{px(x):.1f}" y="{top + ph + 16}" text-anchor="middle">{x:g}</text>')
    for i, (name, v) in enumerate(pts.items()):
        color = COLORS[i % len(COLORS)]
        if v:
            path = " ".join(f"{px(x):.1f},{py(math.log10(y)):.1f}" for x, y in v)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
            for x, y in v:
                out.append(f'<circle cx="{px(x):.1f}" cy="{py(math.log10(y)):.1f}" r="2.5" '
                           f'fill="{color}"/>')
        out.append(f'<text x="{left + pw - 90}" y="{top + 16 + 14 * i}" fill="{color}">'
                   f'{escape(name)}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{top + ph / 2}" transform="rotate(-90 16 {top + ph / 2})" '
               f'text-anchor="middle">{escape(ylabel)}</text>')
    out.append(f'<text x="{left + pw / 2}" y="24" text-anchor="middle">{escape(title)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
