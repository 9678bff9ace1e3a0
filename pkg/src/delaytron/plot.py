"""Dependency-free log-log line charts written as plain SVG text."""
import math
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np
import polars as pl

from .errors import InputError

WIDTH, HEIGHT = 720, 460
LEFT, RIGHT, TOP, BOTTOM = 70, 180, 20, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")
MAX_POINTS = 600

Series = Tuple[str, Sequence[float], Sequence[float]]


def _clean(name, x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.size == 0:
        raise InputError(f"series {name!r} is empty or ragged")
    keep = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    x, y = x[keep], y[keep]
    if x.size < 2 or x.min() == x.max():
        raise InputError(f"series {name!r} needs at least two distinct positive points")
    if x.size > MAX_POINTS:
        # log-spaced thinning keeps the early rounds that dominate a log axis
        idx = np.unique(np.geomspace(1, x.size, MAX_POINTS).round().astype(int) - 1)
        x, y = x[idx], y[idx]
    return name, x, y


def _decades(lo, hi):
    a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
    return a, b if b > a else a + 1


class LogLogFrame:
    """Maps data coordinates to pixels; both axes are log10."""

    def __init__(self, xlim, ylim):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        self.w = WIDTH - LEFT - RIGHT
        self.h = HEIGHT - TOP - BOTTOM

    def px(self, x):
        return LEFT + (np.log10(x) - self.x0) / (self.x1 - self.x0) * self.w

    def py(self, y):
        return TOP + (self.y1 - np.log10(y)) / (self.y1 - self.y0) * self.h


def render(series: List[Series], title: str = "", xlabel: str = "round",
           ylabel: str = "error rate") -> ET.Element:
    if not series:
        raise InputError("nothing to plot")
    cleaned = [_clean(*s) for s in series]
    xs = np.concatenate([c[1] for c in cleaned])
    ys = np.concatenate([c[2] for c in cleaned])
    frame = LogLogFrame(_decades(xs.min(), xs.max()), _decades(ys.min(), ys.max()))

    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", width=str(WIDTH),
                     height=str(HEIGHT), viewBox=f"0 0 {WIDTH} {HEIGHT}")
    ET.SubElement(svg, "rect", x="0", y="0", width=str(WIDTH), height=str(HEIGHT), fill="white")
    axes = ET.SubElement(svg, "g", {"class": "axes", "stroke": "black", "font-family": "sans-serif",
                                    "font-size": "12"})
    ET.SubElement(axes, "rect", x=str(LEFT), y=str(TOP), width=str(frame.w), height=str(frame.h),
                  fill="none")
    for e in range(frame.x0, frame.x1 + 1):
        p = f"{frame.px(10.0 ** e):.3f}"
        ET.SubElement(axes, "line", {"class": "xtick", "x1": p, "x2": p, "y1": str(TOP + frame.h),
                                     "y2": str(TOP + frame.h + 5)})
        t = ET.SubElement(axes, "text", x=p, y=str(TOP + frame.h + 20), stroke="none",
                          **{"text-anchor": "middle"})
        t.text = f"1e{e}"
    for e in range(frame.y0, frame.y1 + 1):
        p = f"{frame.py(10.0 ** e):.3f}"
        ET.SubElement(axes, "line", {"class": "ytick", "x1": str(LEFT - 5), "x2": str(LEFT),
                                     "y1": p, "y2": p})
        t = ET.SubElement(axes, "text", x=str(LEFT - 8), y=p, stroke="none",
                          **{"text-anchor": "end", "dominant-baseline": "middle"})
        t.text = f"1e{e}"
    for text, x, y, extra in ((xlabel, LEFT + frame.w / 2, HEIGHT - 10, {}),
                              (ylabel, 15, TOP + frame.h / 2,
                               {"transform": f"rotate(-90 15 {TOP + frame.h / 2})"}),
                              (title, LEFT + frame.w / 2, 14, {})):
        if text:
            t = ET.SubElement(axes, "text", x=str(x), y=str(y), stroke="none",
                              **{"text-anchor": "middle"}, **extra)
            t.text = text

    legend = ET.SubElement(svg, "g", {"class": "legend", "font-family": "sans-serif",
                                      "font-size": "12"})
    for i, (name, x, y) in enumerate(cleaned):
        color = COLORS[i % len(COLORS)]
        pts = " ".join(f"{a:.3f},{b:.3f}" for a, b in zip(frame.px(x), frame.py(y)))
        line = ET.SubElement(svg, "polyline", points=pts, fill="none", stroke=color,
                             **{"stroke-width": "1.5", "data-series": name})
        line.tail = "\n"
        ly = TOP + 10 + 18 * i
        lx = WIDTH - RIGHT + 15
        ET.SubElement(legend, "line", x1=str(lx), x2=str(lx + 20), y1=str(ly), y2=str(ly),
                      stroke=color, **{"stroke-width": "2"})
        t = ET.SubElement(legend, "text", x=str(lx + 26), y=str(ly + 4))
        t.text = name
    return svg


def emit_plot(series: List[Series], path, **labels) -> Path:
    svg = render(series, **labels)
    path = Path(path)
    ET.ElementTree(svg).write(path, encoding="unicode", xml_declaration=False)
    return path


def series_from_csv(path, column: str = "error_rate") -> Series:
    path = Path(path)
    df = pl.read_csv(path)
    if df.height == 0:
        raise InputError(f"{path} has no rows")
    return path.stem, df["round"].to_numpy(), df[column].to_numpy()


def plot_csvs(paths, out, column: str = "error_rate") -> Path:
    return emit_plot([series_from_csv(p, column) for p in paths], out, ylabel=column.replace("_", " "))
