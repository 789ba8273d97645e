"""Minimal static SVG renderings: pairwise scatter matrices and scree plots."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

MAX_SCATTER_DIM = 6
PALETTE = {"signal": "#c0392b", "noise": "#222222"}
DEFAULT_COLOR = "#1f5fa8"


def _fmt(x):
    return f"{x:.2f}"


def _panel(points_x, points_y, colors, x0, y0, size, lo, hi):
    span = hi - lo if hi > lo else 1.0
    out = [f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{size}" height="{size}" fill="none" stroke="#999"/>']
    for px, py, c in zip(points_x, points_y, colors):
        cx = x0 + (px - lo) / span * size
        cy = y0 + size - (py - lo) / span * size
        out.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="1.6" fill="{c}" fill-opacity="0.7"/>')
    return out


def scatter_matrix_svg(points, labels=None, overlay=None, panel=120, margin=20) -> str:
    """Pairwise scatter plots of the coordinates of ``points`` (``d <= 6``).

    ``labels`` picks colours ("signal" red, "noise" black); ``overlay``
    points, such as preimages, are drawn on top in blue.
    """
    P = np.asarray(points, dtype=np.float64)
    d = P.shape[1]
    if d > MAX_SCATTER_DIM:
        raise ValueError(f"scatter matrices are drawn for d <= {MAX_SCATTER_DIM}, got d={d}")
    colors = [PALETTE.get(str(lab), DEFAULT_COLOR) for lab in labels] if labels is not None else ["#555"] * len(P)
    layers = [(P, colors)]
    if overlay is not None:
        Q = np.asarray(overlay, dtype=np.float64)
        layers.append((Q, [DEFAULT_COLOR] * len(Q)))
    stacked = np.vstack([layer[0] for layer in layers])
    lo, hi = float(stacked.min()), float(stacked.max())
    pairs = [(i, j) for i in range(d) for j in range(d) if i < j]
    cols = max(1, d - 1)
    size = margin + cols * (panel + margin)
    body = []
    for i, j in pairs:
        x0 = margin + (j - 1) * (panel + margin)
        y0 = margin + i * (panel + margin)
        body.append(f'<text x="{_fmt(x0)}" y="{_fmt(y0 - 4)}" font-size="9">x{j + 1} vs x{i + 1}</text>')
        for pts, cols_ in layers:
            body.extend(_panel(pts[:, j], pts[:, i], cols_, x0, y0, panel, lo, hi))
    return _document(size, size, body)


def scree_svg(scree, width=360, height=240, margin=36) -> str:
    """Eigenvalue against index as a polyline with markers."""
    idx = np.array([i for i, _ in scree], dtype=np.float64)
    val = np.array([v for _, v in scree], dtype=np.float64)
    if idx.size == 0:
        raise ValueError("empty scree data")
    top = val.max() if val.max() > 0 else 1.0
    xspan = max(idx.max() - idx.min(), 1.0)
    xs = margin + (idx - idx.min()) / xspan * (width - 2 * margin)
    ys = height - margin - np.clip(val, 0, None) / top * (height - 2 * margin)
    line = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in zip(xs, ys))
    body = [
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" y2="{height - margin}" stroke="#000"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="#000"/>',
        f'<polyline points="{line}" fill="none" stroke="{DEFAULT_COLOR}"/>',
        f'<text x="{width / 2}" y="{height - 8}" font-size="10" text-anchor="middle">component</text>',
        f'<text x="6" y="{margin - 10}" font-size="10">eigenvalue (max {escape(f"{top:.4g}")})</text>',
    ]
    body += [f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="2.5" fill="{DEFAULT_COLOR}"/>' for x, y in zip(xs, ys)]
    return _document(width, height, body)


def _document(width, height, body):
    head = f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">'
    return "\n".join([head, f'<rect width="{width}" height="{height}" fill="#fff"/>', *body, "</svg>"]) + "\n"
