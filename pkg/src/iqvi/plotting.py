"""Deterministic SVG line charts for trajectories and iterate logs."""
from __future__ import annotations

import math

import numpy as np

from .discrete import IterateLog
from .errors import InputError
from .ode import Trajectory

__all__ = ["emit_plot"]

WIDTH, HEIGHT = 800, 500
PAD_L, PAD_R, PAD_T, PAD_B = 80, 30, 40, 60
COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]


def _series(log, kind):
    if isinstance(log, Trajectory):
        xs = np.asarray(log.t, dtype=float)
    elif isinstance(log, IterateLog):
        xs = log.n.astype(float)
    else:
        raise InputError(f"cannot plot object of type {type(log).__name__}")
    if kind == "residual":
        r = np.asarray(log.residual, dtype=float)
        pos = r > 0
        return xs[pos], [np.log10(r[pos])]
    return xs, [log.x[:, j] for j in range(log.x.shape[1])]


def _fmt(v):
    return f"{v:.2f}"


def emit_plot(logs, kind="state", title=None):
    """SVG document with one polyline per coordinate per run (``kind="state"``)
    or one log10-residual polyline per run (``kind="residual"``)."""
    if not logs:
        raise InputError("emit_plot needs at least one log")
    if kind not in ("state", "residual"):
        raise InputError(f"unknown plot kind {kind!r}")
    dims = {lg.x.shape[1] for lg in logs}
    if len(dims) != 1:
        raise InputError("all logs must share one dimension")
    series = [_series(lg, kind) for lg in logs]
    allx = np.concatenate([s[0] for s in series])
    ally = np.concatenate([np.concatenate(s[1]) if s[1] and len(s[0]) else np.empty(0) for s in series])
    if allx.size == 0:
        allx = np.array([0.0, 1.0])
        ally = np.array([0.0, 1.0])
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = WIDTH - PAD_L - PAD_R, HEIGHT - PAD_T - PAD_B

    def sx(v):
        return PAD_L + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return PAD_T + ph - (v - y0) / (y1 - y0) * ph

    xlabel = "t" if isinstance(logs[0], Trajectory) else "n"
    ylabel = "log10 residual" if kind == "residual" else "x_i"
    if title is None:
        title = "residual" if kind == "residual" else "state trajectories"
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{_escape(title)}</text>',
    ]
    for i in range(11):
        gx = PAD_L + pw * i / 10
        gy = PAD_T + ph * i / 10
        xv = x0 + (x1 - x0) * i / 10
        yv = y1 - (y1 - y0) * i / 10
        out.append(f'<line x1="{_fmt(gx)}" y1="{PAD_T}" x2="{_fmt(gx)}" y2="{PAD_T + ph}" stroke="#e0e0e0"/>')
        out.append(f'<line x1="{PAD_L}" y1="{_fmt(gy)}" x2="{PAD_L + pw}" y2="{_fmt(gy)}" stroke="#e0e0e0"/>')
        out.append(f'<text x="{_fmt(gx)}" y="{PAD_T + ph + 18}" text-anchor="middle" font-family="sans-serif" font-size="11">{_tick(xv)}</text>')
        out.append(f'<text x="{PAD_L - 6}" y="{_fmt(gy + 4)}" text-anchor="end" font-family="sans-serif" font-size="11">{_tick(yv)}</text>')
    out.append(f'<rect x="{PAD_L}" y="{PAD_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    out.append(f'<text x="{PAD_L + pw / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle" font-family="sans-serif" font-size="13">{xlabel}</text>')
    out.append(
        f'<text x="20" y="{PAD_T + ph / 2:.1f}" text-anchor="middle" font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 20 {PAD_T + ph / 2:.1f})">{ylabel}</text>'
    )
    line = 0
    for run, (xs, ys) in enumerate(series):
        for j, yv in enumerate(ys):
            color = COLORS[line % len(COLORS)]
            line += 1
            pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(xs, yv))
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"><title>run {run + 1} series {j + 1}</title></polyline>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _tick(v):
    if v == 0 or not math.isfinite(v):
        return "0"
    return f"{v:.3g}"


def _escape(s):
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
