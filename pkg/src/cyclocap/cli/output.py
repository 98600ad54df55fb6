"""CSV and SVG emission for sweep tables.

CSV files start with ``#`` comment lines carrying the tool version, the
scenario hash and the log base, followed by one header row whose cells read
``name [unit]``.  Floats use 17 significant digits so a file read back with
:func:`read_csv` reproduces the table exactly.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

__all__ = ["Table", "write_csv", "read_csv", "write_svg", "format_value"]

_HEADER_RE = re.compile(r"^(.*?)\s*\[(.*)\]$")
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


@dataclass
class Table:
    """Column-oriented table; the first column is the sweep axis."""

    columns: list
    units: list
    data: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (len(self.columns) == len(self.units) == len(self.data)):
            raise ValueError("columns, units and data differ in length")
        lengths = {len(col) for col in self.data}
        if len(lengths) > 1:
            raise ValueError(f"ragged columns: {sorted(lengths)}")

    @property
    def n_rows(self):
        return len(self.data[0]) if self.data else 0

    def column(self, name):
        return self.data[self.columns.index(name)]


def format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _parse_value(text):
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _as_python(value):
    # numpy scalars format differently from builtins; normalize first.
    if hasattr(value, "item"):
        value = value.item()
    return value


def write_csv(table: Table, path):
    """Write ``table`` with LF endings and UTF-8 encoding."""
    buf = io.StringIO()
    for key, value in table.meta.items():
        buf.write(f"# {key}: {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"{c} [{u}]" for c, u in zip(table.columns, table.units)])
    for row in zip(*table.data):
        writer.writerow([format_value(_as_python(v)) for v in row])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())
    return path


def read_csv(path) -> Table:
    """Inverse of :func:`write_csv`."""
    meta = {}
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().split("\n")
    body = []
    for line in lines:
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            meta[key] = value
        elif line:
            body.append(line)
    rows = list(csv.reader(body))
    columns, units = [], []
    for cell in rows[0]:
        m = _HEADER_RE.match(cell)
        columns.append(m.group(1) if m else cell)
        units.append(m.group(2) if m else "")
    data = [[_parse_value(r[j]) for r in rows[1:]] for j in range(len(columns))]
    return Table(columns, units, data, meta)


def _ticks(lo, hi, count=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + 1e-9 * step:
        out.append(round(t, 12))
        t += step
    return out


def write_svg(table: Table, path, title="", series=None, width=640, height=400):
    """Line chart of selected columns against the first column."""
    # Default: every column sharing the unit of the first data column.
    names = series or [c for c, u in zip(table.columns[1:], table.units[1:]) if u == table.units[1]]
    x = [float(v) for v in table.data[0]]
    ys = [[float(v) for v in table.column(name)] for name in names]
    left, right, top, bottom = 60, 150, 30, 45
    pw, ph = width - left - right, height - top - bottom
    x_lo, x_hi = min(x), max(x)
    flat = [v for y in ys for v in y if math.isfinite(v)] or [0.0, 1.0]
    y_lo, y_hi = min(flat), max(flat)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5

    def sx(v):
        return left + (v - x_lo) / (x_hi - x_lo) * pw

    def sy(v):
        return top + ph - (v - y_lo) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="11">',
    ]
    for key, value in table.meta.items():
        out.append(f"<!-- {key}: {value} -->")
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>')
    for t in _ticks(x_lo, x_hi):
        out.append(f'<line x1="{sx(t):.2f}" y1="{top + ph}" x2="{sx(t):.2f}" y2="{top + ph + 4}" stroke="#000"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{top + ph + 16}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y_lo, y_hi):
        out.append(f'<line x1="{left - 4}" y1="{sy(t):.2f}" x2="{left}" y2="{sy(t):.2f}" stroke="#000"/>')
        out.append(f'<text x="{left - 6}" y="{sy(t) + 4:.2f}" text-anchor="end">{t:g}</text>')
    xlabel = f"{table.columns[0]} [{table.units[0]}]"
    ylabel = table.units[1] if len(table.units) > 1 else ""
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 8}" text-anchor="middle">{_esc(xlabel)}</text>')
    out.append(
        f'<text x="14" y="{top + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {top + ph / 2:.1f})">{_esc(ylabel)}</text>'
    )
    if title:
        out.append(f'<text x="{left + pw / 2:.1f}" y="18" text-anchor="middle">{_esc(title)}</text>')
    for idx, (name, y) in enumerate(zip(names, ys)):
        color = _PALETTE[idx % len(_PALETTE)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y) if math.isfinite(b))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
        ly = top + 12 + 16 * idx
        out.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 34}" y="{ly + 4}">{_esc(name)}</text>')
    out.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(out) + "\n")
    return path


def _esc(text):
    return str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
