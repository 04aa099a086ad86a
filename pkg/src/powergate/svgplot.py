"""Minimal self-contained SVG rendering for time series and phase plots.

No plotting dependency: documents are assembled from rectangles, tick
lines, text and polylines.  Output is deterministic for identical data.
"""

from dataclasses import dataclass, field

import numpy as np

COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"]

_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 52, 12, 26, 34


@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    color: str = COLORS[0]
    label: str = ""
    dashed: bool = False


@dataclass
class Panel:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    series: list = field(default_factory=list)

    def add(self, x, y, color=None, label="", dashed=False):
        color = color if color else COLORS[len(self.series) % len(COLORS)]
        self.series.append(Series(np.asarray(x, dtype=np.float64),
                                  np.asarray(y, dtype=np.float64),
                                  color, label, dashed))
        return self


def _nice_ticks(lo, hi, target=5):
    if not np.isfinite(lo) or not np.isfinite(hi):
        lo, hi = 0.0, 1.0
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10.0 ** np.floor(np.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = np.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-12 * step:
        ticks.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return ticks


def _fmt_tick(v):
    return "%.4g" % v


def _panel_svg(panel, ox, oy, width, height):
    """Render one panel at offset (ox, oy); returns a list of SVG elements."""
    plot_w = width - _MARGIN_L - _MARGIN_R
    plot_h = height - _MARGIN_T - _MARGIN_B
    xs = [s.x for s in panel.series if s.x.size]
    ys = [s.y for s in panel.series if s.y.size]
    finite = lambda arrs, f: f([f(a[np.isfinite(a)]) if np.any(np.isfinite(a)) else 0.0 for a in arrs]) if arrs else 0.0
    x_lo, x_hi = finite(xs, min), finite(xs, max)
    y_lo, y_hi = finite(ys, min), finite(ys, max)
    if y_hi - y_lo < 1e-12:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    if x_hi - x_lo < 1e-12:
        x_lo, x_hi = x_lo - 1.0, x_hi + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def sx(v):
        return ox + _MARGIN_L + (v - x_lo) / (x_hi - x_lo) * plot_w

    def sy(v):
        return oy + _MARGIN_T + plot_h - (v - y_lo) / (y_hi - y_lo) * plot_h

    el = [f'<g class="panel">']
    el.append(f'<rect x="{ox + _MARGIN_L:.1f}" y="{oy + _MARGIN_T:.1f}" '
              f'width="{plot_w:.1f}" height="{plot_h:.1f}" '
              f'fill="white" stroke="#444444" stroke-width="1"/>')
    if panel.title:
        el.append(f'<text x="{ox + _MARGIN_L + plot_w / 2:.1f}" y="{oy + 16:.1f}" '
                  f'text-anchor="middle" font-size="12" font-family="sans-serif">'
                  f'{panel.title}</text>')
    for v in _nice_ticks(x_lo, x_hi):
        px = sx(v)
        el.append(f'<line x1="{px:.1f}" y1="{oy + _MARGIN_T + plot_h:.1f}" '
                  f'x2="{px:.1f}" y2="{oy + _MARGIN_T + plot_h + 4:.1f}" stroke="#444444"/>')
        el.append(f'<text x="{px:.1f}" y="{oy + _MARGIN_T + plot_h + 16:.1f}" '
                  f'text-anchor="middle" font-size="9" font-family="sans-serif">'
                  f'{_fmt_tick(v)}</text>')
    for v in _nice_ticks(y_lo, y_hi):
        py = sy(v)
        el.append(f'<line x1="{ox + _MARGIN_L - 4:.1f}" y1="{py:.1f}" '
                  f'x2="{ox + _MARGIN_L:.1f}" y2="{py:.1f}" stroke="#444444"/>')
        el.append(f'<text x="{ox + _MARGIN_L - 6:.1f}" y="{py + 3:.1f}" '
                  f'text-anchor="end" font-size="9" font-family="sans-serif">'
                  f'{_fmt_tick(v)}</text>')
    if panel.xlabel:
        el.append(f'<text x="{ox + _MARGIN_L + plot_w / 2:.1f}" '
                  f'y="{oy + height - 6:.1f}" text-anchor="middle" font-size="10" '
                  f'font-family="sans-serif">{panel.xlabel}</text>')
    if panel.ylabel:
        cx, cy = ox + 12, oy + _MARGIN_T + plot_h / 2
        el.append(f'<text x="{cx:.1f}" y="{cy:.1f}" text-anchor="middle" '
                  f'font-size="10" font-family="sans-serif" '
                  f'transform="rotate(-90 {cx:.1f} {cy:.1f})">{panel.ylabel}</text>')
    for s in panel.series:
        ok = np.isfinite(s.x) & np.isfinite(s.y)
        if not np.any(ok):
            continue
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(s.x[ok], s.y[ok]))
        dash = ' stroke-dasharray="5,4"' if s.dashed else ""
        el.append(f'<polyline points="{pts}" fill="none" stroke="{s.color}" '
                  f'stroke-width="1.2"{dash}/>')
    legend_y = oy + _MARGIN_T + 12
    for s in panel.series:
        if not s.label:
            continue
        el.append(f'<line x1="{ox + _MARGIN_L + 8:.1f}" y1="{legend_y - 3:.1f}" '
                  f'x2="{ox + _MARGIN_L + 26:.1f}" y2="{legend_y - 3:.1f}" '
                  f'stroke="{s.color}" stroke-width="1.5"/>')
        el.append(f'<text x="{ox + _MARGIN_L + 30:.1f}" y="{legend_y:.1f}" '
                  f'font-size="9" font-family="sans-serif">{s.label}</text>')
        legend_y += 12
    el.append("</g>")
    return el


def render(panels, ncols=2, panel_width=340, panel_height=210):
    """Render panels into a complete SVG document string."""
    n = len(panels)
    ncols = max(1, min(ncols, n))
    nrows = (n + ncols - 1) // ncols
    width = ncols * panel_width
    height = nrows * panel_height
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    for idx, panel in enumerate(panels):
        r, c = divmod(idx, ncols)
        parts.extend(_panel_svg(panel, c * panel_width, r * panel_height,
                                panel_width, panel_height))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write(panels, path, ncols=2):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(render(panels, ncols=ncols))
