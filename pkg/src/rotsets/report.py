"""
Deterministic writers for experiment outputs: points CSV, summary JSON,
SVG scatter with hull, and the git-style config hash.
"""

import csv
import hashlib
import json

import numpy as np

CANVAS = 800
PADDING = 0.10
DOT_RADIUS = 1.5


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def git_blob_hash(text):
    """SHA-1 of ``blob <len>\\0<bytes>``, as ``git hash-object`` prints it."""
    data = text.encode("utf-8")
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def config_hash(config):
    return git_blob_hash(canonical_json(config))


def _fmt(v):
    v = float(v)
    if np.isnan(v):
        return "nan"
    return repr(v)


def write_points_csv(path, estimate):
    """Columns vx, vy, n, word_id, base_x, base_y; one row per cloud point."""
    meta = estimate.meta
    if meta is None:
        meta = np.full((len(estimate.cloud), 4), np.nan)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["vx", "vy", "n", "word_id", "base_x", "base_y"])
        for (vx, vy), (n, wid, bx, by) in zip(estimate.cloud, meta):
            w.writerow([_fmt(vx), _fmt(vy), "" if np.isnan(n) else int(n),
                        "" if np.isnan(wid) else int(wid), _fmt(bx), _fmt(by)])
    return len(estimate.cloud)


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2, allow_nan=False)
        fh.write("\n")


def _clean(obj):
    """Replace non-finite floats by None so JSON stays strict."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def clean(obj):
    return _clean(obj)


def emit_plot(estimate, path):
    """
    SVG scatter of the cloud with its hull.

    Fixed 800 x 800 canvas; the view is the cloud's bounding box padded by
    10 % on each side (a zero-size box is widened to 1); dots that would
    land on the same tenth of a pixel are drawn once.
    """
    cloud = np.asarray(estimate.cloud, dtype=float)
    if len(cloud) == 0:
        raise ValueError("empty estimate")
    lo, hi = cloud.min(axis=0), cloud.max(axis=0)
    span = hi - lo
    span = np.where(span > 0, span, 1.0)
    centre = 0.5 * (lo + hi)
    lo = centre - 0.5 * span * (1 + 2 * PADDING)
    hi = centre + 0.5 * span * (1 + 2 * PADDING)

    def px(pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        x = (pts[:, 0] - lo[0]) / (hi[0] - lo[0]) * CANVAS
        y = CANVAS - (pts[:, 1] - lo[1]) / (hi[1] - lo[1]) * CANVAS
        return np.column_stack([x, y])

    dots = np.unique(np.round(px(cloud), 1), axis=0)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{CANVAS}" '
        f'viewBox="0 0 {CANVAS} {CANVAS}">',
        f'<rect x="0" y="0" width="{CANVAS}" height="{CANVAS}" fill="white"/>',
    ]
    # axes through the origin when it is in view
    ox, oy = px([[0.0, 0.0]])[0]
    if 0 <= ox <= CANVAS:
        lines.append(f'<line x1="{ox:.1f}" y1="0" x2="{ox:.1f}" y2="{CANVAS}" stroke="#bbbbbb" stroke-width="1"/>')
    if 0 <= oy <= CANVAS:
        lines.append(f'<line x1="0" y1="{oy:.1f}" x2="{CANVAS}" y2="{oy:.1f}" stroke="#bbbbbb" stroke-width="1"/>')
    lines.append('<g fill="#1f5fa8">')
    lines += [f'<circle cx="{x:.1f}" cy="{y:.1f}" r="{DOT_RADIUS}"/>' for x, y in dots]
    lines.append("</g>")
    hull = np.asarray(estimate.hull, dtype=float)
    if len(hull) >= 2:
        ring = px(np.vstack([hull, hull[:1]]))
        pts = " ".join(f"{x:.1f},{y:.1f}" for x, y in ring)
        lines.append(f'<polyline points="{pts}" fill="none" stroke="#c0392b" stroke-width="1.5"/>')
    lines.append(
        f'<text x="8" y="{CANVAS - 8}" font-family="monospace" font-size="12" fill="#444444">'
        f'x [{lo[0]:.3f}, {hi[0]:.3f}]  y [{lo[1]:.3f}, {hi[1]:.3f}]</text>')
    lines.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
