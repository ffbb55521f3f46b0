"""Self-contained SVG line charts for the two CSV outputs.

The document is built with :mod:`xml.etree.ElementTree`, so it is always
well-formed XML and needs no fonts, scripts or stylesheets from outside.
"""

from __future__ import annotations

import csv
import xml.etree.ElementTree as ET
from pathlib import Path

from .output import AGENTS_HEADER, RECOMMENDER_HEADER

SVG_NS = "http://www.w3.org/2000/svg"
CHART_KINDS = {"agents_evolution": AGENTS_HEADER, "recommender_q": RECOMMENDER_HEADER}
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")

WIDTH, HEIGHT = 720, 420
MARGIN = {"left": 70, "right": 130, "top": 40, "bottom": 55}
PAD = 0.05


class ChartError(ValueError):
    """The CSV does not fit the requested chart kind."""


def _read(csv_path: str | Path, kind: str) -> list[dict]:
    if kind not in CHART_KINDS:
        raise ChartError(f"unknown chart kind {kind!r}; expected one of {sorted(CHART_KINDS)}")
    with open(csv_path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = tuple(reader.fieldnames or ())
        if not header:
            raise ChartError(f"{csv_path}: empty CSV")
        if header != CHART_KINDS[kind]:
            raise ChartError(f"{csv_path}: header {','.join(header)} does not match {kind}")
        rows = list(reader)
    if not rows:
        raise ChartError(f"{csv_path}: no data rows")
    return rows


def _series(rows: list[dict], kind: str) -> dict[str, list[tuple[float, float]]]:
    try:
        if kind == "agents_evolution":
            return {"non_addicted": [(float(r["iteration"]), float(r["non_addicted"])) for r in rows]}
        out: dict[str, list[tuple[float, float]]] = {}
        for r in rows:
            out.setdefault(f"arm {int(r['arm'])}", []).append((float(r["iteration"]), float(r["mean_q"])))
        return dict(sorted(out.items(), key=lambda kv: int(kv[0].split()[1])))
    except (TypeError, ValueError) as exc:
        raise ChartError(f"non-numeric cell: {exc}") from None


def _padded(lo: float, hi: float) -> tuple[float, float]:
    span = hi - lo
    if span == 0:
        span = abs(lo) or 1.0
        lo, hi = lo - span / 2, hi + span / 2
        span = hi - lo
    return lo - PAD * span, hi + PAD * span


def _sub(parent, tag, text=None, **attrs):
    el = ET.SubElement(parent, tag, {k.replace("_", "-"): str(v) for k, v in attrs.items()})
    if text is not None:
        el.text = text
    return el


def render_chart(csv_path: str | Path, kind: str, out_path: str | Path) -> Path:
    """Draw ``csv_path`` as an SVG line chart of the given kind.

    ``agents_evolution`` plots the non-addicted count per iteration;
    ``recommender_q`` draws one polyline per arm plus a legend. Both axes
    are linear and span the data range with 5% padding on each side.
    """
    rows = _read(csv_path, kind)
    series = _series(rows, kind)
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    x0, x1 = _padded(min(xs), max(xs))
    y0, y1 = _padded(min(ys), max(ys))

    left, top = MARGIN["left"], MARGIN["top"]
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x: float) -> float:
        return left + (x - x0) / (x1 - x0) * pw

    def py(y: float) -> float:
        return top + ph - (y - y0) / (y1 - y0) * ph

    ET.register_namespace("", SVG_NS)
    svg = ET.Element(
        "svg",
        {"xmlns": SVG_NS, "width": str(WIDTH), "height": str(HEIGHT), "viewBox": f"0 0 {WIDTH} {HEIGHT}"},
    )
    _sub(svg, "rect", x=0, y=0, width=WIDTH, height=HEIGHT, fill="white")
    title = "Non-addicted agents" if kind == "agents_evolution" else "Recommender arm values"
    _sub(svg, "text", title, x=WIDTH / 2, y=22, text_anchor="middle", font_family="sans-serif", font_size=15)

    axes = _sub(svg, "g", stroke="#333", stroke_width=1)
    _sub(axes, "line", x1=left, y1=top + ph, x2=left + pw, y2=top + ph)
    _sub(axes, "line", x1=left, y1=top, x2=left, y2=top + ph)
    ticks = _sub(svg, "g", font_family="sans-serif", font_size=11, fill="#333")
    for i in range(5):
        fx = x0 + (x1 - x0) * i / 4
        fy = y0 + (y1 - y0) * i / 4
        _sub(ticks, "text", f"{fx:.4g}", x=f"{px(fx):.2f}", y=top + ph + 18, text_anchor="middle")
        _sub(ticks, "text", f"{fy:.4g}", x=left - 6, y=f"{py(fy) + 4:.2f}", text_anchor="end")
    _sub(ticks, "text", "iteration", x=left + pw / 2, y=HEIGHT - 12, text_anchor="middle")
    ylabel = "non_addicted" if kind == "agents_evolution" else "mean_q"
    _sub(ticks, "text", ylabel, x=16, y=top + ph / 2, text_anchor="middle",
         transform=f"rotate(-90 16 {top + ph / 2:.2f})")

    lines = _sub(svg, "g", fill="none", stroke_width=1.5)
    legend = _sub(svg, "g", font_family="sans-serif", font_size=12)
    for i, (name, pts) in enumerate(series.items()):
        colour = PALETTE[i % len(PALETTE)]
        points = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
        _sub(lines, "polyline", points=points, stroke=colour)
        if kind == "recommender_q":
            ly = top + 10 + 18 * i
            _sub(legend, "line", x1=left + pw + 12, y1=ly, x2=left + pw + 32, y2=ly, stroke=colour, stroke_width=2)
            _sub(legend, "text", name, x=left + pw + 38, y=ly + 4)

    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    ET.ElementTree(svg).write(out, encoding="utf-8", xml_declaration=True)
    return out
