"""CSV and standalone SVG output of set boundaries and trajectories."""
from pathlib import Path

import numpy as np

PIECE_COLORS = {"NEG": "#d62728", "POS": "#1f77b4", "common": "#17becf"}


def write_polylines_csv(polylines, path):
    """One ``x,y`` row per vertex; consecutive polylines separated by a blank line."""
    path = Path(path)
    with open(path, "w") as fh:
        fh.write("x,y\n")
        for k, line in enumerate(polylines):
            if k:
                fh.write("\n")
            for x, y in np.asarray(line).reshape(-1, 2):
                fh.write(f"{float(x)!r},{float(y)!r}\n")
    return path


def read_polylines_csv(path):
    lines, cur = [], []
    with open(path) as fh:
        next(fh)
        for row in fh:
            row = row.strip()
            if not row:
                lines.append(np.array(cur).reshape(-1, 2))
                cur = []
                continue
            cur.append([float(v) for v in row.split(",")])
    lines.append(np.array(cur).reshape(-1, 2))
    return lines


def render_svg(curves, trajectories=(), size=480, margin=30, labels=("x", "y")):
    """Minimal SVG: ``curves`` is a list of (polyline, color); trajectories drawn in grey."""
    pts = [np.asarray(c).reshape(-1, 2) for c, _ in curves if len(c)]
    pts += [np.asarray(t).reshape(-1, 2) for t in trajectories if len(t)]
    if pts:
        allp = np.vstack(pts)
        lo, hi = allp.min(axis=0), allp.max(axis=0)
    else:
        lo, hi = np.array([-1.0, -1.0]), np.array([1.0, 1.0])
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    scale = (size - 2 * margin) / span.max()

    def xy(p):
        p = np.asarray(p).reshape(-1, 2)
        sx = margin + (p[:, 0] - lo[0]) * scale
        sy = size - margin - (p[:, 1] - lo[1]) * scale
        return " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(sx, sy))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">',
           f'<rect width="{size}" height="{size}" fill="white"/>']
    # axes through the origin when it is in view
    if lo[1] <= 0 <= hi[1]:
        out.append(f'<polyline points="{xy([[lo[0], 0], [hi[0], 0]])}" stroke="#999" '
                   'stroke-width="0.5" fill="none"/>')
    if lo[0] <= 0 <= hi[0]:
        out.append(f'<polyline points="{xy([[0, lo[1]], [0, hi[1]]])}" stroke="#999" '
                   'stroke-width="0.5" fill="none"/>')
    for t in trajectories:
        out.append(f'<polyline points="{xy(t)}" stroke="#888" stroke-opacity="0.3" '
                   'stroke-width="0.5" fill="none"/>')
    for curve, color in curves:
        if len(curve):
            out.append(f'<polyline points="{xy(curve)}" stroke="{color}" stroke-width="1.5" '
                       'fill="none"/>')
    out.append(f'<text x="{size - margin}" y="{size - 8}" font-size="12">{labels[0]}</text>')
    out.append(f'<text x="8" y="{margin - 10}" font-size="12">{labels[1]}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(curves, path, trajectories=(), labels=("x", "y")):
    path = Path(path)
    path.write_text(render_svg(curves, trajectories, labels=labels))
    return path
