"""CSV and SVG emission with atomic writes."""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence


def format_value(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    try:
        import numpy as np

        if isinstance(v, np.integer):
            return str(int(v))
        if isinstance(v, np.bool_):
            return "1" if v else "0"
    except ImportError:  # pragma: no cover
        pass
    if isinstance(v, float) or hasattr(v, "__float__"):
        x = float(v)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def atomic_write(path, text: str) -> Path:
    """Write ``text`` to a temp file beside ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    return atomic_write(path, csv_text(header, rows))


WIDTH, HEIGHT = 800, 400
_MARGIN = 20


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def gap_profile_svg(circumference: float, gaps, profile_x, profile_y, title: str = "") -> str:
    """Gap bar chart on top, a polyline profile underneath; fixed 800x400 viewbox.

    ``gaps`` is an ``(n, 2)`` array of realized gap endpoints, drawn as
    rectangles along ``[0, circumference]``.
    """
    span = WIDTH - 2 * _MARGIN
    top_h = HEIGHT / 2 - 2 * _MARGIN
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{_MARGIN}" y="14" font-size="12" font-family="monospace">'
                     f"{_escape(title)}</text>")
    parts.append(f'<line x1="{_MARGIN}" y1="{_fmt(_MARGIN + top_h)}" x2="{WIDTH - _MARGIN}" '
                 f'y2="{_fmt(_MARGIN + top_h)}" stroke="black" stroke-width="1"/>')
    for a, b in gaps:
        x0 = _MARGIN + span * a / circumference
        w = max(span * (b - a) / circumference, 0.25)
        parts.append(f'<rect x="{_fmt(x0)}" y="{_fmt(_MARGIN)}" width="{_fmt(w)}" '
                     f'height="{_fmt(top_h)}" fill="steelblue" fill-opacity="0.6"/>')
    xs = list(profile_x)
    ys = list(profile_y)
    if xs:
        lo, hi = min(ys), max(ys)
        if hi - lo < 1e-15:
            lo, hi = lo - 1.0, hi + 1.0
        y_top = HEIGHT / 2 + _MARGIN
        y_span = HEIGHT / 2 - 2 * _MARGIN
        x_lo, x_hi = min(xs), max(xs)
        x_span = (x_hi - x_lo) or 1.0
        pts = " ".join(
            f"{_fmt(_MARGIN + span * (x - x_lo) / x_span)},{_fmt(y_top + y_span * (hi - y) / (hi - lo))}"
            for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="darkred" stroke-width="1"/>')
    parts.append("</svg>\n")
    return "\n".join(parts)


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
