"""Minimal self-contained SVG line plots.

Convenience output only; acceptance always runs on the CSV numbers.  No
plotting dependency is pulled in for this.
"""

import numpy as np

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_WIDTH, _HEIGHT = 760, 480
_MARGIN_LEFT, _MARGIN_RIGHT = 70, 20
_MARGIN_TOP, _MARGIN_BOTTOM = 40, 50


def _ticks(low: float, high: float, count: int = 5):
    if high == low:
        high = low + 1.0
    return np.linspace(low, high, count)


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def line_plot(path, series, title: str = "", xlabel: str = "", ylabel: str = "") -> None:
    """Write an SVG with one polyline per (x, y, label) triple."""
    series = [(np.asarray(x, float), np.asarray(y, float), str(label))
              for x, y, label in series]
    if not series:
        raise ValueError("nothing to plot")
    x_low = min(x.min() for x, _, _ in series)
    x_high = max(x.max() for x, _, _ in series)
    y_low = min(y.min() for _, y, _ in series)
    y_high = max(y.max() for _, y, _ in series)
    if y_high == y_low:
        y_high, y_low = y_high + 1.0, y_low - 1.0
    pad = 0.04 * (y_high - y_low)
    y_low -= pad
    y_high += pad

    plot_w = _WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = _HEIGHT - _MARGIN_TOP - _MARGIN_BOTTOM

    def sx(x):
        return _MARGIN_LEFT + (x - x_low) / (x_high - x_low) * plot_w

    def sy(y):
        return _MARGIN_TOP + (y_high - y) / (y_high - y_low) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_WIDTH / 2}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
    ]
    axis = (f'<rect x="{_MARGIN_LEFT}" y="{_MARGIN_TOP}" width="{plot_w}" '
            f'height="{plot_h}" fill="none" stroke="#444" stroke-width="1"/>')
    parts.append(axis)
    for tick in _ticks(x_low, x_high):
        px = sx(tick)
        parts.append(f'<line x1="{px:.2f}" y1="{sy(y_low):.2f}" x2="{px:.2f}" '
                     f'y2="{sy(y_low) + 5:.2f}" stroke="#444"/>')
        parts.append(f'<text x="{px:.2f}" y="{sy(y_low) + 20:.2f}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11">{_fmt(tick)}</text>')
    for tick in _ticks(y_low, y_high):
        py = sy(tick)
        parts.append(f'<line x1="{_MARGIN_LEFT - 5}" y1="{py:.2f}" '
                     f'x2="{_MARGIN_LEFT}" y2="{py:.2f}" stroke="#444"/>')
        parts.append(f'<text x="{_MARGIN_LEFT - 8}" y="{py + 4:.2f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{_fmt(tick)}</text>')
    parts.append(f'<text x="{_MARGIN_LEFT + plot_w / 2}" y="{_HEIGHT - 10}" '
                 f'text-anchor="middle" font-family="sans-serif" font-size="13">{xlabel}</text>')
    parts.append(f'<text x="18" y="{_MARGIN_TOP + plot_h / 2}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="13" '
                 f'transform="rotate(-90 18 {_MARGIN_TOP + plot_h / 2})">{ylabel}</text>')

    for index, (x, y, label) in enumerate(series):
        color = _COLORS[index % len(_COLORS)]
        stride = max(1, len(x) // 4000)
        points = " ".join(f"{sx(px):.2f},{sy(py):.2f}"
                          for px, py in zip(x[::stride], y[::stride]))
        parts.append(f'<polyline points="{points}" fill="none" stroke="{color}" '
                     f'stroke-width="1.4"/>')
        if label:
            ly = _MARGIN_TOP + 16 + 16 * index
            lx = _WIDTH - _MARGIN_RIGHT - 150
            parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
                         f'stroke="{color}" stroke-width="2"/>')
            parts.append(f'<text x="{lx + 28}" y="{ly}" font-family="sans-serif" '
                         f'font-size="12">{label}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(parts) + "\n")
