"""Static SVG figures: NashConv line charts, ternary (barycentric) plots, 2x2 phase squares."""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from typing import Optional, Sequence, Union

import numpy as np

from .games import GameSchedule, ScheduleKind
from .trajectory import Trajectory

PLOT_KINDS = ("line_nashconv", "line_relative", "ternary", "square_phase")

WIDTH, HEIGHT = 640, 480
MARGIN = 60
LEGEND_W = 150
MAX_POINTS = 600

# endpoints of the time gradient (start -> end) per series
_PALETTE = [
    ((68, 1, 84), (253, 231, 37)),
    ((8, 48, 107), (107, 174, 214)),
    ((103, 0, 13), (252, 146, 114)),
    ((0, 68, 27), (116, 196, 118)),
    ((63, 0, 125), (188, 189, 220)),
]

_SQRT3_2 = math.sqrt(3.0) / 2.0


def ternary_xy(p: Sequence[float]) -> tuple[float, float]:
    """Barycentric point in a unit-side triangle with vertices (0,0), (1,0), (1/2, sqrt(3)/2).

    Action 0 sits at the bottom-left vertex, action 1 bottom-right, action 2 at the top.
    """
    p = np.asarray(p, dtype=float)
    if p.shape != (3,):
        raise ValueError(f"ternary coordinates need 3 probabilities, got shape {p.shape}")
    return float(p[1] + 0.5 * p[2]), float(_SQRT3_2 * p[2])


def _hex(rgb) -> str:
    return "#%02x%02x%02x" % tuple(int(round(c)) for c in rgb)


def _lerp_color(pair, s: float) -> str:
    a, b = np.asarray(pair[0], float), np.asarray(pair[1], float)
    return _hex(a + (b - a) * s)


def _downsample(n: int) -> np.ndarray:
    if n <= MAX_POINTS:
        return np.arange(n)
    return np.unique(np.linspace(0, n - 1, MAX_POINTS).round().astype(int))


def _fmt(v: float) -> str:
    return f"{v:.2f}"


class _Canvas:
    def __init__(self, title: str):
        self.root = ET.Element("svg", {
            "xmlns": "http://www.w3.org/2000/svg",
            "width": str(WIDTH + LEGEND_W), "height": str(HEIGHT),
            "viewBox": f"0 0 {WIDTH + LEGEND_W} {HEIGHT}",
        })
        ET.SubElement(self.root, "rect", {"x": "0", "y": "0", "width": str(WIDTH + LEGEND_W),
                                          "height": str(HEIGHT), "fill": "white"})
        t = ET.SubElement(self.root, "text", {"x": str(WIDTH // 2), "y": "24", "text-anchor": "middle",
                                              "font-family": "sans-serif", "font-size": "16"})
        t.text = title
        self.plot = ET.SubElement(self.root, "g", {"id": "plot"})
        self.legend = ET.SubElement(self.root, "g", {"id": "legend"})
        self._legend_rows = 0

    def line(self, x1, y1, x2, y2, stroke="black", width=1.0, dash: Optional[str] = None, parent=None):
        attrs = {"x1": _fmt(x1), "y1": _fmt(y1), "x2": _fmt(x2), "y2": _fmt(y2),
                 "stroke": stroke, "stroke-width": str(width)}
        if dash:
            attrs["stroke-dasharray"] = dash
        return ET.SubElement(parent if parent is not None else self.plot, "line", attrs)

    def text(self, x, y, s, anchor="middle", size=12, parent=None):
        el = ET.SubElement(parent if parent is not None else self.plot, "text", {
            "x": _fmt(x), "y": _fmt(y), "text-anchor": anchor,
            "font-family": "sans-serif", "font-size": str(size)})
        el.text = s
        return el

    def series(self, xs: np.ndarray, ys: np.ndarray, colors, label: str, dash: Optional[str] = None):
        """A polyline whose segments are colored along the time gradient."""
        g = ET.SubElement(self.plot, "g", {"class": "series", "data-label": label})
        n = xs.size
        if n == 0:
            return g
        if n == 1 or (np.ptp(xs) < 1e-9 and np.ptp(ys) < 1e-9):
            ET.SubElement(g, "circle", {"cx": _fmt(xs[0]), "cy": _fmt(ys[0]), "r": "4",
                                        "fill": _lerp_color(colors, 1.0)})
            return g
        pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in zip(xs, ys))
        ET.SubElement(g, "polyline", {"points": pts, "fill": "none", "stroke": "none"})
        for i in range(n - 1):
            self.line(xs[i], ys[i], xs[i + 1], ys[i + 1], stroke=_lerp_color(colors, i / (n - 2 or 1)),
                      width=1.5, dash=dash, parent=g)
        ET.SubElement(g, "circle", {"cx": _fmt(xs[-1]), "cy": _fmt(ys[-1]), "r": "3",
                                    "fill": _lerp_color(colors, 1.0)})
        return g

    def legend_entry(self, label: str, colors, dash: Optional[str] = None):
        y = 50 + 20 * self._legend_rows
        x = WIDTH + 5
        self.line(x, y, x + 12, y, stroke=_lerp_color(colors, 0.0), width=3, dash=dash, parent=self.legend)
        self.line(x + 12, y, x + 24, y, stroke=_lerp_color(colors, 1.0), width=3, dash=dash, parent=self.legend)
        self.text(x + 30, y + 4, label, anchor="start", size=11, parent=self.legend)
        self._legend_rows += 1

    def tostring(self) -> str:
        ET.indent(self.root)
        return ET.tostring(self.root, encoding="unicode", xml_declaration=False) + "\n"


def _as_list(trajs) -> list[Trajectory]:
    return [trajs] if isinstance(trajs, Trajectory) else list(trajs)


def _labels(trajs: list[Trajectory], labels: Optional[Sequence[str]]) -> list[str]:
    if labels is None:
        return [str(t.metadata.get("label", f"run {i + 1}")) for i, t in enumerate(trajs)]
    if len(labels) != len(trajs):
        raise ValueError(f"{len(labels)} labels for {len(trajs)} trajectories")
    return list(labels)


def render_svg(trajs: Union[Trajectory, Sequence[Trajectory]], kind: str,
               labels: Optional[Sequence[str]] = None, title: str = "",
               schedule: Optional[GameSchedule] = None) -> str:
    """Render one or more trajectories as a standalone SVG document (returned as text).

    ``line_nashconv``/``line_relative`` plot the (relative) NashConv against time with
    red vertical lines at the phase switches of a phase-switched schedule.
    ``ternary`` and ``square_phase`` draw policy paths of 3- and 2-action
    games; player 2 is dashed. Colors run from dark (start) to light (end).
    """
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {PLOT_KINDS}")
    trajs = _as_list(trajs)
    names = _labels(trajs, labels)
    canvas = _Canvas(title)
    if kind.startswith("line"):
        _line_plot(canvas, trajs, names, kind == "line_relative", schedule)
    elif kind == "ternary":
        _ternary_plot(canvas, trajs, names)
    else:
        _square_plot(canvas, trajs, names)
    return canvas.tostring()


def write_svg(path, trajs, kind: str, **kwargs) -> None:
    doc = render_svg(trajs, kind, **kwargs)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(doc)
    except OSError as exc:
        raise OSError(f"cannot write SVG {path}: {exc.strerror or exc}") from exc


def _nice_max(v: float) -> float:
    if not np.isfinite(v) or v <= 0:
        return 1.0
    mag = 10 ** math.floor(math.log10(v))
    for m in (1, 2, 2.5, 5, 10):
        if m * mag >= v:
            return m * mag
    return 10 * mag


def _line_plot(c: _Canvas, trajs, names, relative: bool, schedule: Optional[GameSchedule]):
    x0, x1 = MARGIN, WIDTH - 20
    y0, y1 = HEIGHT - MARGIN, 40
    c.plot.append(ET.Element("rect", {"x": str(x0), "y": str(y1), "width": str(x1 - x0),
                                      "height": str(y0 - y1), "fill": "none", "stroke": "black"}))
    nonempty = [t for t in trajs if len(t)]
    t_max = max((float(t.t[-1]) for t in nonempty), default=1.0) or 1.0
    t_min = min((float(t.t[0]) for t in nonempty), default=0.0)
    if t_max <= t_min:
        t_max = t_min + 1.0
    values = [t.relative_nashconv if relative else t.nashconv for t in nonempty]
    v_max = _nice_max(max((float(np.nanmax(v)) for v in values if v.size and np.any(np.isfinite(v))),
                          default=1.0))
    c.text((x0 + x1) / 2, HEIGHT - 15, "t")
    c.text(18, (y0 + y1) / 2, "relative NashConv" if relative else "NashConv", size=12)
    for frac in (0.0, 0.5, 1.0):
        c.text(x0 - 6, y0 - frac * (y0 - y1) + 4, f"{frac * v_max:g}", anchor="end", size=10)
        c.text(x0 + frac * (x1 - x0), y0 + 16, f"{t_min + frac * (t_max - t_min):g}", size=10)

    def sx(t):
        return x0 + (np.asarray(t, float) - t_min) / (t_max - t_min) * (x1 - x0)

    def sy(v):
        return y0 - np.clip(np.nan_to_num(np.asarray(v, float)), 0, v_max) / v_max * (y0 - y1)

    sched = schedule or next((t.schedule for t in trajs if t.schedule is not None), None)
    if sched is not None and sched.kind is ScheduleKind.PHASE_SWITCHED:
        for b in sched.boundaries(int(math.ceil(t_max)) + 1):
            if t_min < b < t_max:
                c.line(sx(b), y0, sx(b), y1, stroke="red", width=1)
    for i, (traj, name) in enumerate(zip(trajs, names)):
        colors = _PALETTE[i % len(_PALETTE)]
        c.legend_entry(name, colors)
        if not len(traj):
            continue
        idx = _downsample(len(traj))
        v = traj.relative_nashconv if relative else traj.nashconv
        c.series(sx(traj.t[idx]), sy(v[idx]), colors, name)


def _ternary_plot(c: _Canvas, trajs, names):
    for t in trajs:
        if len(t) and (t.policy1.shape[1] != 3 or t.policy2.shape[1] != 3):
            raise ValueError("ternary plots need 3-action policies for both players")
    side = min(WIDTH - 2 * MARGIN, (HEIGHT - 2 * MARGIN) / _SQRT3_2)
    ox = (WIDTH - side) / 2
    oy = HEIGHT - MARGIN

    def to_px(p):
        x, y = ternary_xy(p)
        return ox + side * x, oy - side * y

    corners = [to_px(np.eye(3)[k]) for k in range(3)]
    ET.SubElement(c.plot, "polygon", {"points": " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in corners),
                                      "fill": "none", "stroke": "black"})
    offsets = [(-10, 16), (10, 16), (0, -8)]
    for k, ((x, y), (dx, dy)) in enumerate(zip(corners, offsets)):
        c.text(x + dx, y + dy, f"a{k}")
    for i, (traj, name) in enumerate(zip(trajs, names)):
        colors = _PALETTE[i % len(_PALETTE)]
        for player, dash in ((1, None), (2, "5,3")):
            label = f"{name} (player {player})"
            c.legend_entry(label, colors, dash)
            if not len(traj):
                continue
            idx = _downsample(len(traj))
            pts = np.array([to_px(p) for p in traj.policies(player - 1)[idx]])
            c.series(pts[:, 0], pts[:, 1], colors, label, dash)


def _square_plot(c: _Canvas, trajs, names):
    for t in trajs:
        if len(t) and (t.policy1.shape[1] != 2 or t.policy2.shape[1] != 2):
            raise ValueError("square phase plots need 2-action policies for both players")
    side = min(WIDTH, HEIGHT) - 2 * MARGIN
    ox = (WIDTH - side) / 2
    oy = HEIGHT - MARGIN
    c.plot.append(ET.Element("rect", {"x": _fmt(ox), "y": _fmt(oy - side), "width": _fmt(side),
                                      "height": _fmt(side), "fill": "none", "stroke": "black"}))
    c.text(ox + side / 2, oy + 30, "player 1: P(action 0)")
    c.text(ox - 30, oy - side / 2, "player 2: P(action 0)", size=11)
    for frac in (0.0, 0.5, 1.0):
        c.text(ox + frac * side, oy + 14, f"{frac:g}", size=10)
        c.text(ox - 6, oy - frac * side + 4, f"{frac:g}", anchor="end", size=10)
    for i, (traj, name) in enumerate(zip(trajs, names)):
        colors = _PALETTE[i % len(_PALETTE)]
        c.legend_entry(name, colors)
        if not len(traj):
            continue
        idx = _downsample(len(traj))
        xs = ox + side * traj.policy1[idx, 0]
        ys = oy - side * traj.policy2[idx, 0]
        c.series(xs, ys, colors, name)
