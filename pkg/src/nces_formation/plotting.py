"""Static SVG charts from a trace directory (no plotting library needed)."""

from __future__ import annotations

import json
from html import escape
from pathlib import Path

import numpy as np

from .io import ERROR_COLUMNS, TARGET_COLUMNS, TRAJECTORY_COLUMNS, TraceFormatError, atomic_write_text, read_csv

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"]
W, H = 720, 480
ML, MR, MT, MB = 70, 20, 40, 50


class _Axes:
    def __init__(self, xlim, ylim, equal=False):
        x0, x1 = xlim
        y0, y1 = ylim
        if x1 - x0 <= 0:
            x0, x1 = x0 - 1, x1 + 1
        if y1 - y0 <= 0:
            y0, y1 = y0 - 1, y1 + 1
        pw, ph = W - ML - MR, H - MT - MB
        if equal:
            scale = min(pw / (x1 - x0), ph / (y1 - y0))
            cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
            x0, x1 = cx - pw / scale / 2, cx + pw / scale / 2
            y0, y1 = cy - ph / scale / 2, cy + ph / scale / 2
        self.xlim, self.ylim = (x0, x1), (y0, y1)
        self.sx = pw / (x1 - x0)
        self.sy = ph / (y1 - y0)

    def px(self, x):
        return ML + (np.asarray(x) - self.xlim[0]) * self.sx

    def py(self, y):
        return H - MB - (np.asarray(y) - self.ylim[0]) * self.sy


def _ticks(lo, hi, n=6):
    span = hi - lo
    step = 10 ** np.floor(np.log10(span / n))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= n:
            step *= mult
            break
    start = np.ceil(lo / step) * step
    return np.arange(start, hi + step * 1e-9, step)


def _frame(ax: _Axes, title, xlabel, ylabel) -> list[str]:
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<rect x="{ML}" y="{MT}" width="{W - ML - MR}" height="{H - MT - MB}" fill="none" stroke="#333"/>',
    ]
    for t in _ticks(*ax.xlim):
        x = float(ax.px(t))
        out.append(f'<line x1="{x:.1f}" y1="{H - MB}" x2="{x:.1f}" y2="{H - MB + 5}" stroke="#333"/>')
        out.append(f'<text x="{x:.1f}" y="{H - MB + 18}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(*ax.ylim):
        y = float(ax.py(t))
        out.append(f'<line x1="{ML - 5}" y1="{y:.1f}" x2="{ML}" y2="{y:.1f}" stroke="#333"/>')
        out.append(f'<text x="{ML - 8}" y="{y + 4:.1f}" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{W / 2}" y="{H - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{H / 2}" text-anchor="middle" transform="rotate(-90 16 {H / 2})">{escape(ylabel)}</text>')
    return out


def _polyline(ax, xs, ys, color, width=1.5, dash=None):
    pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(ax.px(xs), ax.py(ys)))
    d = f' stroke-dasharray="{dash}"' if dash else ""
    return f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"{d}/>'


def _legend(ids) -> list[str]:
    out = []
    for k, node in enumerate(ids):
        y = MT + 14 + 16 * k
        c = PALETTE[k % len(PALETTE)]
        out.append(f'<line x1="{W - MR - 70}" y1="{y}" x2="{W - MR - 50}" y2="{y}" stroke="{c}" stroke-width="2"/>')
        out.append(f'<text x="{W - MR - 45}" y="{y + 4}">M{node}</text>')
    return out


def _series_chart(t, ids, values, title, ylabel, hline=None, events=()):
    ymin = min(float(np.nanmin(v)) for v in values.values())
    ymax = max(float(np.nanmax(v)) for v in values.values())
    if hline is not None:
        ymin, ymax = min(ymin, hline), max(ymax, hline)
    pad = 0.05 * (ymax - ymin or 1.0)
    ax = _Axes((float(t.min()), float(t.max())), (ymin - pad, ymax + pad))
    out = _frame(ax, title, "time (s)", ylabel)
    for ev in events:
        x = float(ax.px(ev))
        out.append(f'<line x1="{x:.1f}" y1="{MT}" x2="{x:.1f}" y2="{H - MB}" stroke="#999" stroke-dasharray="3,3"/>')
    if hline is not None:
        y = float(ax.py(hline))
        out.append(f'<line class="reference" x1="{ML}" y1="{y:.1f}" x2="{W - MR}" y2="{y:.1f}" stroke="black" stroke-dasharray="6,4"/>')
        out.append(f'<text x="{ML + 4}" y="{y - 4:.1f}">{hline:g}</text>')
    for k, node in enumerate(ids):
        ts, vs = values[node]
        out.append(_polyline(ax, ts, vs, PALETTE[k % len(PALETTE)]))
    return "\n".join(out + _legend(ids) + ["</svg>"])


def _per_node(data, key):
    out = {}
    for node in np.unique(data["id"]).astype(int):
        sel = data["id"] == node
        out[int(node)] = (data["time"][sel], data[key][sel])
    return out


def render(trace_dir) -> dict[str, str]:
    """Build all four SVG documents in memory; raises on missing or empty input."""
    d = Path(trace_dir)
    for name in ("trajectory.csv", "error.csv", "target.csv", "events.json"):
        if not (d / name).exists():
            raise TraceFormatError(f"{d / name} is missing")
    traj = read_csv(d / "trajectory.csv", TRAJECTORY_COLUMNS)
    err = read_csv(d / "error.csv", ERROR_COLUMNS)
    tgt = read_csv(d / "target.csv", TARGET_COLUMNS)
    events = json.loads((d / "events.json").read_text())
    scen_path = d / "scenario.toml"
    obstacles = []
    if scen_path.exists():
        from .scenarios import ScenarioSpec

        obstacles = list(ScenarioSpec.from_toml(scen_path.read_text()).obstacles)

    ids = sorted(int(i) for i in np.unique(traj["id"]))
    fail_times = [e["time"] for e in events if e["kind"] == "failure"]
    switch_times = [e["time"] for e in events if e["kind"] == "switch"]

    # trajectory plot with formation snapshots
    xs = np.concatenate([traj["x"], tgt["x"]])
    ys = np.concatenate([traj["y"], tgt["y"]])
    ax = _Axes((xs.min() - 0.5, xs.max() + 0.5), (ys.min() - 0.5, ys.max() + 0.5), equal=True)
    out = _frame(ax, "Swarm trajectories", "x (km)", "y (km)")
    for ob in obstacles:
        for (xa, ya), (xb, yb) in ob.segments():
            out.append(f'<line class="wall" x1="{float(ax.px(xa)):.1f}" y1="{float(ax.py(ya)):.1f}" '
                       f'x2="{float(ax.px(xb)):.1f}" y2="{float(ax.py(yb)):.1f}" stroke="black" stroke-width="4"/>')
    out.append(_polyline(ax, tgt["x"], tgt["y"], "#555", 1.5, "5,4"))
    for k, node in enumerate(ids):
        sel = traj["id"] == node
        out.append(_polyline(ax, traj["x"][sel], traj["y"][sel], PALETTE[k % len(PALETTE)]))
    steps = np.unique(traj["step"])
    for snap in steps[:: max(1, len(steps) // 6)]:
        sel = traj["step"] == snap
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(ax.px(traj["x"][sel]), ax.py(traj["y"][sel])))
        out.append(f'<polygon class="snapshot" points="{pts}" fill="none" stroke="#888" stroke-width="0.8"/>')
    for ft in fail_times:
        sel = np.isclose(traj["time"], ft)
        for x, y in zip(ax.px(traj["x"][sel]), ax.py(traj["y"][sel])):
            out.append(f'<circle class="failure" cx="{x:.1f}" cy="{y:.1f}" r="6" fill="none" stroke="red" stroke-width="2"/>')
        if sel.any():
            out.append(f'<text x="{float(ax.px(traj["x"][sel].mean())):.1f}" y="{float(ax.py(traj["y"][sel].max())) - 10:.1f}" '
                       f'fill="red" text-anchor="middle">failure t={ft:g}s</text>')
    traj_svg = "\n".join(out + _legend(ids) + ["</svg>"])

    marks = fail_times + switch_times
    return {
        "trajectory.svg": traj_svg,
        "error.svg": _series_chart(err["time"], ids, _per_node(err, "resultant"), "Resultant error",
                                   "|e_r|", hline=0.1, events=marks),
        "speed.svg": _series_chart(traj["time"], ids, _per_node(traj, "speed"), "Speed", "V (km/s)", events=marks),
        "heading.svg": _series_chart(traj["time"], ids, _per_node(traj, "heading"), "Heading", "heading (rad)",
                                     events=marks),
    }


def plot_trace(trace_dir, out_dir=None) -> list[Path]:
    docs = render(trace_dir)
    out = Path(out_dir or trace_dir)
    paths = []
    for name, text in docs.items():
        atomic_write_text(out / name, text)
        paths.append(out / name)
    return paths
