"""SVG line charts of trace metrics on a log10 axis against the iteration count."""

from __future__ import annotations

import csv
import math
import os
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 720, 450
MARGIN = {"left": 70, "right": 170, "top": 20, "bottom": 50}

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2")
DASHES = ("", "6,3", "2,2", "8,3,2,3")


class PlotError(ValueError):
    pass


def read_series(path, metric="eta_re"):
    """(iterations, values) of ``metric`` from a trace CSV; blank and non-positive
    values are dropped because they have no log10."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PlotError(f"{path}: empty trace file") from None
        for col in ("iter", metric):
            if col not in header:
                raise PlotError(f"{path}: trace has no column {col!r}")
        i_it, i_m = header.index("iter"), header.index(metric)
        its, vals = [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            try:
                k = int(rec[i_it])
                text = rec[i_m]
                v = float(text) if text else None
            except (ValueError, IndexError):
                raise PlotError(f"{path}:{lineno}: malformed trace row") from None
            if v is not None and v > 0 and math.isfinite(v):
                its.append(k)
                vals.append(v)
    if not its:
        raise PlotError(f"{path}: no positive {metric!r} values to plot")
    return its, vals


def style(index):
    """Stroke colour and dash pattern; distinct for the first len(COLORS) * len(DASHES) traces."""
    return COLORS[index % len(COLORS)], DASHES[(index // len(COLORS) + index) % len(DASHES)]


def render_svg(series, metric="eta_re"):
    """SVG 1.1 document text.

    Parameters
    ----------
    series : list of (label, iterations, values)
    metric : str
        Axis label.
    """
    if not series:
        raise PlotError("nothing to plot")
    x_max = max(max(its) for _, its, _ in series)
    x_min = min(min(its) for _, its, _ in series)
    logs = [math.log10(v) for _, _, vals in series for v in vals]
    y_lo, y_hi = math.floor(min(logs)), math.ceil(max(logs))
    if y_hi == y_lo:
        y_hi += 1
    if x_max == x_min:
        x_max = x_min + 1
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(k):
        return MARGIN["left"] + pw * (k - x_min) / (x_max - x_min)

    def py(v):
        return MARGIN["top"] + ph * (y_hi - math.log10(v)) / (y_hi - y_lo)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        '<g class="grid" stroke="#dddddd" stroke-width="1">',
    ]
    for d in range(y_lo, y_hi + 1):
        y = py(10.0**d)
        out.append(f'<line x1="{MARGIN["left"]}" y1="{y:.2f}" x2="{MARGIN["left"] + pw}" y2="{y:.2f}"/>')
    out.append("</g>")
    out.append('<g class="ticks" font-family="sans-serif" font-size="12" fill="black">')
    for d in range(y_lo, y_hi + 1):
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{py(10.0**d) + 4:.2f}" text-anchor="end">1e{d}</text>')
    for j in range(6):
        k = x_min + (x_max - x_min) * j / 5
        out.append(
            f'<text x="{px(k):.2f}" y="{MARGIN["top"] + ph + 18}" text-anchor="middle">{int(round(k))}</text>'
        )
    out.append(
        f'<text x="{MARGIN["left"] + pw / 2:.2f}" y="{HEIGHT - 10}" text-anchor="middle">iteration</text>'
    )
    out.append(
        f'<text x="16" y="{MARGIN["top"] + ph / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2:.2f})">{escape(metric)} (log10)</text>'
    )
    out.append("</g>")
    out.append(
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>'
    )
    for idx, (label, its, vals) in enumerate(series):
        color, dash = style(idx)
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        pts = " ".join(f"{px(k):.2f},{py(v):.2f}" for k, v in zip(its, vals))
        out.append(
            f'<polyline class="trace" fill="none" stroke="{color}" stroke-width="1.5"{dash_attr} points="{pts}"/>'
        )
        every = max(1, len(its) // 50)
        out.append(f'<g class="markers" fill="{color}">')
        for k, v in list(zip(its, vals))[::every]:
            out.append(f'<circle cx="{px(k):.2f}" cy="{py(v):.2f}" r="2.5"/>')
        out.append("</g>")
        ly = MARGIN["top"] + 16 + 20 * idx
        lx = MARGIN["left"] + pw + 12
        out.append(
            f'<line x1="{lx}" y1="{ly}" x2="{lx + 28}" y2="{ly}" stroke="{color}" stroke-width="1.5"{dash_attr}/>'
        )
        out.append(
            f'<text x="{lx + 34}" y="{ly + 4}" font-family="sans-serif" font-size="12">{escape(label)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_traces(paths, output, metric="eta_re"):
    """Read trace CSVs and write the chart to ``output``; labels are the file stems."""
    series = []
    for path in paths:
        its, vals = read_series(path, metric)
        label = os.path.splitext(os.path.basename(path))[0]
        series.append((label, its, vals))
    text = render_svg(series, metric)
    with open(output, "w", encoding="utf-8") as fh:
        fh.write(text)
    return text
