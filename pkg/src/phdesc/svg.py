"""Minimal, dependency-free SVG figures with deterministic output."""

from __future__ import annotations

import math

import numpy as np

from .errors import ParameterError
from .io import atomic_write

W, H = 420, 420
PAD = 50


def _num(x):
    return f"{x:.3f}".rstrip("0").rstrip(".")


def _doc(body, title):
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">\n'
            f"<title>{title}</title>\n"
            f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>\n'
            + "".join(body) + "</svg>\n")


class _Axes:
    def __init__(self, xlim, ylim):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0

    def px(self, x):
        return PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 2 * PAD)

    def py(self, y):
        return H - PAD - (y - self.y0) / (self.y1 - self.y0) * (H - 2 * PAD)

    def frame(self, xlabel, ylabel):
        out = [f'<g class="axes" stroke="black" fill="none">'
               f'<line x1="{PAD}" y1="{H - PAD}" x2="{W - PAD}" y2="{H - PAD}"/>'
               f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{H - PAD}"/></g>\n']
        for k in range(5):
            fx = self.x0 + k * (self.x1 - self.x0) / 4
            fy = self.y0 + k * (self.y1 - self.y0) / 4
            out.append(f'<text x="{_num(self.px(fx))}" y="{H - PAD + 16}" font-size="10" '
                       f'text-anchor="middle">{fx:.3g}</text>\n')
            out.append(f'<text x="{PAD - 6}" y="{_num(self.py(fy) + 3)}" font-size="10" '
                       f'text-anchor="end">{fy:.3g}</text>\n')
        out.append(f'<text x="{W / 2}" y="{H - 12}" font-size="12" text-anchor="middle">{xlabel}</text>\n')
        out.append(f'<text x="14" y="{H / 2}" font-size="12" text-anchor="middle" '
                   f'transform="rotate(-90 14 {H / 2})">{ylabel}</text>\n')
        return out


def _note(text):
    return f'<text class="note" x="{W / 2}" y="{H / 2}" font-size="14" text-anchor="middle">{text}</text>\n'


def pd_scatter(pairs, title="persistence diagram"):
    """``pairs`` is an iterable of ``(birth, death)``; essential points are not drawn."""
    pts = np.array([(b, d) for b, d in pairs if math.isfinite(d)], dtype=float).reshape(-1, 2)
    hi = float(pts.max()) * 1.05 if len(pts) else 1.0
    ax = _Axes((0.0, hi), (0.0, hi))
    body = ax.frame("birth", "death")
    body.append(f'<line class="diagonal" x1="{_num(ax.px(0))}" y1="{_num(ax.py(0))}" '
                f'x2="{_num(ax.px(hi))}" y2="{_num(ax.py(hi))}" stroke="gray" stroke-dasharray="4 3"/>\n')
    if not len(pts):
        body.append(_note("no pairs"))
    for b, d in pts:
        body.append(f'<circle class="pair" cx="{_num(ax.px(b))}" cy="{_num(ax.py(d))}" r="2.5" '
                    f'fill="steelblue" fill-opacity="0.7"/>\n')
    return _doc(body, title)


def _diverging(v, vmax):
    t = 0.0 if vmax == 0 else max(-1.0, min(1.0, v / vmax))
    if t >= 0:
        r, g, b = 255, round(255 * (1 - t)), round(255 * (1 - t))
    else:
        r, g, b = round(255 * (1 + t)), round(255 * (1 + t)), 255
    return f"#{r:02x}{g:02x}{b:02x}"


def coeff_heatmap(grid, lo=0.0, hi=8.0, title="ridge coefficients"):
    """Birth on x, death on y; blue negative, red positive, scale symmetric about 0."""
    grid = np.asarray(grid, dtype=float)
    n = grid.shape[0]
    vmax = float(np.max(np.abs(grid))) if grid.size else 0.0
    ax = _Axes((lo, hi), (lo, hi))
    body = ax.frame("birth", "death")
    body.append(f'<desc>color scale symmetric: -{vmax:.6g} (blue) .. +{vmax:.6g} (red)</desc>\n')
    cell = (W - 2 * PAD) / n
    rows, cols = np.nonzero(grid)
    for r, c in zip(rows, cols):
        x = PAD + r * cell
        y = H - PAD - (c + 1) * cell
        body.append(f'<rect x="{_num(x)}" y="{_num(y)}" width="{_num(cell)}" height="{_num(cell)}" '
                    f'fill="{_diverging(grid[r, c], vmax)}"/>\n')
    return _doc(body, title)


def pca_scatter(coords, values=None, title="PCA"):
    coords = np.asarray(coords, dtype=float).reshape(-1, 2)
    if not len(coords):
        ax = _Axes((0, 1), (0, 1))
        return _doc(ax.frame("PC1", "PC2") + [_note("no samples")], title)
    ax = _Axes((coords[:, 0].min(), coords[:, 0].max()), (coords[:, 1].min(), coords[:, 1].max()))
    body = ax.frame("PC1", "PC2")
    vals = None if values is None else np.asarray(values, dtype=float)
    if vals is not None and len(vals):
        vlo, vhi = float(np.nanmin(vals)), float(np.nanmax(vals))
    for k, (x, y) in enumerate(coords):
        color = "steelblue"
        if vals is not None and np.isfinite(vals[k]) and vhi > vlo:
            t = (vals[k] - vlo) / (vhi - vlo)
            color = f"#{round(255 * t):02x}40{round(255 * (1 - t)):02x}"
        body.append(f'<circle cx="{_num(ax.px(x))}" cy="{_num(ax.py(y))}" r="2.5" fill="{color}"/>\n')
    return _doc(body, title)


def hist1d(edges, counts, xlabel="value", title="histogram", series=None):
    """Bar chart; ``series`` may hold extra ``(name, counts)`` overlaid as outlines."""
    edges = np.asarray(edges, dtype=float)
    counts = np.asarray(counts, dtype=float)
    all_counts = [counts] + [np.asarray(c, dtype=float) for _, c in (series or [])]
    top = max((float(c.max()) for c in all_counts if c.size), default=0.0)
    ax = _Axes((float(edges[0]), float(edges[-1])), (0.0, top if top > 0 else 1.0))
    body = ax.frame(xlabel, "count")
    if top == 0:
        body.append(_note("no data"))
    for k, c in enumerate(counts):
        if c <= 0:
            continue
        x0, x1 = ax.px(edges[k]), ax.px(edges[k + 1])
        body.append(f'<rect x="{_num(x0)}" y="{_num(ax.py(c))}" width="{_num(x1 - x0)}" '
                    f'height="{_num(ax.py(0) - ax.py(c))}" fill="steelblue" fill-opacity="0.6"/>\n')
    for name, c in series or []:
        pts = " ".join(f"{_num(ax.px((edges[k] + edges[k + 1]) / 2))},{_num(ax.py(v))}" for k, v in enumerate(c))
        body.append(f'<polyline class="{name}" points="{pts}" fill="none" stroke="firebrick"/>\n')
    return _doc(body, title)


_KINDS = {"pd_scatter": pd_scatter, "coeff_heatmap": coeff_heatmap, "pca_scatter": pca_scatter, "hist1d": hist1d}


def emit_svg(kind, path, *args, **kwargs):
    """Render figure ``kind`` and write it atomically to ``path``."""
    if kind not in _KINDS:
        raise ParameterError(f"unknown figure kind {kind!r}; expected one of {sorted(_KINDS)}")
    text = _KINDS[kind](*args, **kwargs)
    with atomic_write(path) as fh:
        fh.write(text)
    return path
