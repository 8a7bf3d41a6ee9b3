"""CSV and SVG output for sweep records."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

from .harness import ExperimentRecord

__all__ = ["emit_csv", "read_csv", "emit_scatter_svg"]

CSV_HEADER = ["mechanism", "epsilon", "sigma_or_kappa", "log_bayes_capacity",
              "mse_mean", "mse_std", "n_seeds"]


def _fmt(x: float) -> str:
    return repr(float(x))


def emit_csv(records: Sequence[ExperimentRecord], path) -> None:
    """One row per record; floats are written with ``repr`` (17 significant digits)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow([r.mechanism, _fmt(r.epsilon), _fmt(r.sigma_or_kappa),
                        _fmt(r.log_bayes_capacity), _fmt(r.mse_mean), _fmt(r.mse_std), r.n_seeds])


def read_csv(path) -> list[ExperimentRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [ExperimentRecord(r["mechanism"], float(r["epsilon"]), float(r["sigma_or_kappa"]),
                             float(r["log_bayes_capacity"]), float(r["mse_mean"]),
                             float(r["mse_std"]), int(r["n_seeds"]))
            for r in rows]


_STYLE = {
    "gaussian": ("#1f77b4", "circle"),
    "vmf": ("#d62728", "square"),
}
_FALLBACK = [("#2ca02c", "triangle"), ("#9467bd", "diamond"), ("#8c564b", "circle")]


def _glyph(shape: str, x: float, y: float, color: str) -> str:
    r = 5
    if shape == "circle":
        return f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r}" fill="{color}"/>'
    if shape == "square":
        return f'<rect x="{x - r:.2f}" y="{y - r:.2f}" width="{2 * r}" height="{2 * r}" fill="{color}"/>'
    if shape == "triangle":
        pts = f"{x:.2f},{y - r:.2f} {x - r:.2f},{y + r:.2f} {x + r:.2f},{y + r:.2f}"
    else:
        pts = f"{x:.2f},{y - r:.2f} {x - r:.2f},{y:.2f} {x:.2f},{y + r:.2f} {x + r:.2f},{y:.2f}"
    return f'<polygon points="{pts}" fill="{color}"/>'


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def emit_scatter_svg(records: Sequence[ExperimentRecord], x_axis: str, path) -> None:
    """Scatter of ``mse_mean`` against epsilon (log scale) or log Bayes' capacity.

    Failed records and points with a non-finite x coordinate are skipped.
    """
    if x_axis not in ("epsilon", "log_capacity"):
        raise ValueError(f"x_axis must be 'epsilon' or 'log_capacity', got {x_axis!r}")
    if not records:
        raise ValueError("need at least one record to plot")

    def xval(r):
        v = r.epsilon if x_axis == "epsilon" else r.log_bayes_capacity
        if x_axis == "epsilon":
            return math.log10(v) if v > 0 else math.nan
        return v

    pts = [(r, xval(r), r.mse_mean) for r in records]
    pts = [p for p in pts if math.isfinite(p[1]) and math.isfinite(p[2])]
    W, H, ml, mr, mt, mb = 560, 400, 70, 130, 30, 55
    pw, ph = W - ml - mr, H - mt - mb
    xs = [p[1] for p in pts] or [0.0]
    ys = [p[2] for p in pts] or [0.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = 0.0, max(ys) * 1.1 or 1.0
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5

    def sx(v):
        return ml + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return mt + ph - (v - y0) / (y1 - y0) * ph

    xlabel = "epsilon (log scale)" if x_axis == "epsilon" else "log Bayes' capacity (nats)"
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
           f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>']
    for t in _ticks(x0, x1):
        label = f"{10 ** t:.3g}" if x_axis == "epsilon" else f"{t:.3g}"
        out.append(f'<line x1="{sx(t):.2f}" y1="{mt + ph}" x2="{sx(t):.2f}" y2="{mt + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{mt + ph + 18}" text-anchor="middle">{label}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{ml - 5}" y1="{sy(t):.2f}" x2="{ml}" y2="{sy(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{ml - 8}" y="{sy(t) + 4:.2f}" text-anchor="end">{t:.3g}</text>')
    out.append(f'<text x="{ml + pw / 2}" y="{H - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{mt + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {mt + ph / 2})">MSE (mean over seeds)</text>')

    mechs = sorted({p[0].mechanism for p in pts})
    styles = {m: _STYLE.get(m) or _FALLBACK[i % len(_FALLBACK)] for i, m in enumerate(mechs)}
    for r, x, y in pts:
        color, shape = styles[r.mechanism]
        out.append(_glyph(shape, sx(x), sy(y), color))
    if len(mechs) > 1:
        lx, ly = ml + pw + 20, mt + 10
        out.append('<g class="legend">')
        for i, m in enumerate(mechs):
            color, shape = styles[m]
            out.append(_glyph(shape, lx, ly + 20 * i, color))
            out.append(f'<text x="{lx + 12}" y="{ly + 20 * i + 4}">{escape(m)}</text>')
        out.append("</g>")
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")
