"""Minimal standalone SVG line charts of per-road series over discrete time."""
from __future__ import annotations

import os
from xml.sax.saxutils import escape

import numpy as np

from .scenario import STEPS_FILE, read_steps

SERIES = ("x", "x_hat", "d")
SERIES_LABEL = {"x": "density of all cars", "x_hat": "density of FRS cars", "d": "exogenous cars"}

# tab10 cycle
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)

WIDTH, HEIGHT = 800, 480
LEFT, RIGHT, TOP, BOTTOM = 70, 110, 40, 60


class PlotError(ValueError):
    code = "PlotError"


class UnknownRoad(PlotError):
    code = "UnknownRoad"


class MissingRun(PlotError):
    code = "MissingRun"


def _nice_ticks(lo, hi, count=6):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = np.floor(lo / step) * step
    stop = np.ceil(hi / step) * step
    ticks = np.arange(start, stop + step / 2, step)
    return ticks, float(start), float(stop)


def _num(v):
    s = f"{v:.2f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


def line_chart(k, series: dict, ylabel: str, title: str = "", hline=None) -> str:
    """SVG text with one polyline per entry of ``series`` (label -> values over ``k``)."""
    k = np.asarray(k, dtype=float)
    vals = np.concatenate([np.asarray(v, dtype=float) for v in series.values()])
    lo, hi = float(vals.min()), float(vals.max())
    if hline is not None:
        lo, hi = min(lo, hline), max(hi, hline)
    if hi - lo < 1e-12:
        lo, hi = lo - 1.0, hi + 1.0
    yt, y0, y1 = _nice_ticks(lo, hi)
    xt, x0, x1 = _nice_ticks(float(k.min()), float(k.max()) if k.size > 1 else float(k.min()) + 1.0)
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(v):
        return LEFT + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return TOP + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">{escape(title)}</text>')
    for t in yt:
        y = sy(t)
        out.append(f'<line x1="{LEFT}" y1="{y:.2f}" x2="{LEFT + pw}" y2="{y:.2f}" stroke="#e0e0e0"/>')
        out.append(f'<text x="{LEFT - 6}" y="{y + 4:.2f}" text-anchor="end" font-family="sans-serif" font-size="11">{_num(t)}</text>')
    for t in xt:
        x = sx(t)
        out.append(f'<line x1="{x:.2f}" y1="{TOP + ph}" x2="{x:.2f}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{TOP + ph + 18}" text-anchor="middle" font-family="sans-serif" font-size="11">{_num(t)}</text>')
    out.append(f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle" font-family="sans-serif" font-size="13">discrete time k</text>')
    out.append(
        f'<text x="18" y="{TOP + ph / 2:.1f}" text-anchor="middle" font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 18 {TOP + ph / 2:.1f})">{escape(ylabel)}</text>'
    )
    if hline is not None:
        y = sy(hline)
        out.append(f'<line x1="{LEFT}" y1="{y:.2f}" x2="{LEFT + pw}" y2="{y:.2f}" stroke="black" stroke-dasharray="6 4"/>')
    for n, (label, v) in enumerate(series.items()):
        color = PALETTE[n % len(PALETTE)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(k, np.asarray(v, dtype=float)))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"><title>{escape(str(label))}</title></polyline>')
        ly = TOP + 12 + 14 * n
        if ly < TOP + ph:
            out.append(f'<line x1="{LEFT + pw + 10}" y1="{ly}" x2="{LEFT + pw + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
            out.append(f'<text x="{LEFT + pw + 35}" y="{ly + 4}" font-family="sans-serif" font-size="11">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_run(run_dir, series="x_hat", roads=None, floor=None) -> str:
    """Chart one series of a persisted run. ``roads`` is a list of 1-based ids (None = all)."""
    if series not in SERIES:
        raise PlotError(f"series must be one of {', '.join(SERIES)}, got {series!r}")
    path = os.path.join(run_dir, STEPS_FILE)
    if not os.path.isfile(path):
        raise MissingRun(f"MissingRun: no {STEPS_FILE} in {run_dir}")
    steps = read_steps(path)
    n = steps["road"].size
    if roads is None:
        roads = list(range(1, n + 1))
    if not roads:
        raise UnknownRoad("UnknownRoad: empty road selection")
    bad = [r for r in roads if not 1 <= r <= n]
    if bad:
        raise UnknownRoad(f"UnknownRoad: {bad} not in 1..{n}")
    data = steps[series]
    chart = {f"road {r}": data[:, r - 1] for r in roads}
    return line_chart(steps["k"], chart, SERIES_LABEL[series], title=f"{SERIES_LABEL[series]} vs k", hline=floor)
