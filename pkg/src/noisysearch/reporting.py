"""Deterministic CSV tables and self-contained SVG line charts.

Every CSV starts with a comment line carrying the full configuration and
seed, then a header row.  Floats are written with ``repr`` (shortest
round-trip form), so identical runs produce byte-identical files.  The SVG
writer is hand-rolled on purpose: no plotting dependency, fixed coordinate
formatting, diffable output.
"""

from __future__ import annotations

import json
import math
from typing import Mapping, Sequence

__all__ = ["format_value", "csv_text", "write_csv", "svg_text", "emit_plot"]


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(float(v))  # float(): numpy scalars repr differently
    if isinstance(v, int):
        return str(int(v))
    if isinstance(v, str):
        if "," in v or "\n" in v or '"' in v:
            return '"' + v.replace('"', '""') + '"'
        return v
    try:
        return repr(float(v))  # numpy scalars
    except (TypeError, ValueError):
        return str(v)


def csv_text(header: Sequence[str], rows: Sequence[Sequence], config: Mapping) -> str:
    lines = ["# config: " + json.dumps(dict(config), sort_keys=True)]
    lines.append(",".join(header))
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row of length {len(row)} does not match header {header}")
        lines.append(",".join(format_value(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path, header: Sequence[str], rows: Sequence[Sequence], config: Mapping) -> None:
    text = csv_text(header, rows, config)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# SVG line charts
# ---------------------------------------------------------------------------

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

_WIDTH, _HEIGHT = 640, 420
_ML, _MR, _MT, _MB = 72, 24, 24, 48  # margins


def _column(rows: Sequence[Mapping], name: str) -> list[float]:
    vals = []
    for i, row in enumerate(rows):
        if name not in row:
            raise ValueError(f"row {i} is missing column {name!r}")
        v = row[name]
        try:
            f = float(v)
        except (TypeError, ValueError):
            raise ValueError(f"column {name!r} is not numeric (row {i}: {v!r})") from None
        if not math.isfinite(f):
            raise ValueError(f"column {name!r} has a non-finite value in row {i}")
        vals.append(f)
    return vals


def _scale(lo: float, hi: float) -> tuple[float, float]:
    if hi <= lo:
        pad = 1.0 if lo == 0 else abs(lo) * 0.5
        return lo - pad, hi + pad
    return lo, hi


def svg_text(rows: Sequence[Mapping], x: str, ys: Sequence[str]) -> str:
    """A line chart of the y columns against the x column, as SVG text."""
    if not rows:
        raise ValueError("cannot plot an empty table")
    if not ys:
        raise ValueError("need at least one y column")
    xs = _column(rows, x)
    series = {name: _column(rows, name) for name in ys}

    x_lo, x_hi = _scale(min(xs), max(xs))
    all_y = [v for vals in series.values() for v in vals]
    y_lo, y_hi = _scale(min(all_y), max(all_y))

    def px(v: float) -> float:
        return _ML + (v - x_lo) / (x_hi - x_lo) * (_WIDTH - _ML - _MR)

    def py(v: float) -> float:
        return _HEIGHT - _MB - (v - y_lo) / (y_hi - y_lo) * (_HEIGHT - _MT - _MB)

    order = sorted(range(len(xs)), key=lambda i: (xs[i], i))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<line x1="{_ML}" y1="{_HEIGHT - _MB}" x2="{_WIDTH - _MR}" y2="{_HEIGHT - _MB}" '
        'stroke="black" stroke-width="1"/>',
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_HEIGHT - _MB}" '
        'stroke="black" stroke-width="1"/>',
        f'<text x="{_ML}" y="{_HEIGHT - _MB + 20}" font-size="12">{x_lo:.6g}</text>',
        f'<text x="{_WIDTH - _MR - 40}" y="{_HEIGHT - _MB + 20}" font-size="12">{x_hi:.6g}</text>',
        f'<text x="4" y="{_HEIGHT - _MB}" font-size="12">{y_lo:.6g}</text>',
        f'<text x="4" y="{_MT + 12}" font-size="12">{y_hi:.6g}</text>',
        f'<text x="{(_ML + _WIDTH - _MR) // 2}" y="{_HEIGHT - 10}" font-size="13" '
        f'text-anchor="middle">{x}</text>',
    ]
    for k, name in enumerate(ys):
        color = _PALETTE[k % len(_PALETTE)]
        pts = " ".join(f"{px(xs[i]):.3f},{py(series[name][i]):.3f}" for i in order)
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" '
                     f'points="{pts}"/>')
        for i in order:
            parts.append(f'<circle cx="{px(xs[i]):.3f}" cy="{py(series[name][i]):.3f}" '
                         f'r="3" fill="{color}"/>')
    if len(ys) > 1:
        for k, name in enumerate(ys):
            color = _PALETTE[k % len(_PALETTE)]
            yy = _MT + 16 + 18 * k
            parts.append(f'<rect x="{_WIDTH - _MR - 130}" y="{yy - 9}" width="12" '
                         f'height="12" fill="{color}"/>')
            parts.append(f'<text x="{_WIDTH - _MR - 112}" y="{yy + 2}" '
                         f'font-size="12">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_plot(rows: Sequence[Mapping], x: str, ys: Sequence[str], path) -> None:
    """Write the chart; raises before creating the file on bad input."""
    text = svg_text(rows, x, ys)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
