"""File writers: CSV tables, plain PGM label images, JSON reports and SVG renderings.

Floats are written with 17 significant digits so that every file round-trips
exactly; rows are emitted in a deterministic order.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .geometry import Disk, Domain, Polygon, Rectangle
from .lattice import Grid
from .nodal import EulerData, PartitionLabeling


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def write_csv(path, header, rows):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_json(path, data):
    path = Path(path)
    # json uses repr for floats, which round-trips
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")
    return path


def label_image(labeling: PartitionLabeling) -> np.ndarray:
    """(ny, nx) array of labels with 0 outside the domain, top row = largest y."""
    g = labeling.grid
    img = np.zeros(g.shape, dtype=int)
    img[g.node_ij[:, 0], g.node_ij[:, 1]] = labeling.labels
    return img.T[::-1]


def write_pgm(path, labeling: PartitionLabeling):
    """Plain (P2) PGM with maximum gray value mu; 0 marks the exterior."""
    img = label_image(labeling)
    ny, nx = img.shape
    lines = ["P2", f"{nx} {ny}", str(max(1, labeling.mu))]
    lines += [" ".join(map(str, row)) for row in img]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_pgm(path) -> np.ndarray:
    tokens = [t for line in Path(path).read_text().splitlines() if not line.startswith("#") for t in line.split()]
    if tokens[0] != "P2":
        raise ValueError("not a plain PGM file")
    nx, ny, _ = int(tokens[1]), int(tokens[2]), int(tokens[3])
    return np.array(tokens[4:], dtype=int).reshape(ny, nx)


# ------------------------------------------------------------------ SVG

_PALETTE = ("#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac")
SVG_SIZE = 512
LABEL_FILL_LIMIT = 20_000


def _shape_svg(shape, tf, style):
    if isinstance(shape, Disk):
        cx, cy = tf(*shape.center)
        r = shape.radius * tf.scale
        return f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="{r:.3f}" {style}/>'
    if isinstance(shape, Rectangle):
        x0, y0, x1, y1 = shape.bbox()
        ax, ay = tf(x0, y1)
        return f'<rect x="{ax:.3f}" y="{ay:.3f}" width="{shape.width * tf.scale:.3f}" height="{shape.height * tf.scale:.3f}" {style}/>'
    if isinstance(shape, Polygon):
        pts = " ".join(f"{x:.3f},{y:.3f}" for x, y in (tf(*p) for p in shape.vertices))
        return f'<polygon points="{pts}" {style}/>'
    raise TypeError(f"cannot render {type(shape).__name__}")


class _Transform:
    def __init__(self, domain: Domain, size=SVG_SIZE, margin=16):
        x0, y0, x1, y1 = domain.bbox()
        self.scale = (size - 2 * margin) / max(x1 - x0, y1 - y0)
        self.x0, self.y1, self.margin = x0, y1, margin

    def __call__(self, x, y):
        return self.margin + (x - self.x0) * self.scale, self.margin + (self.y1 - y) * self.scale


def interface_segments(labeling: PartitionLabeling) -> np.ndarray:
    """Dual segments (length h, through each interface edge midpoint) forming the cut polylines."""
    g = labeling.grid
    e = g.edges[labeling.interface]
    d = g.edge_dir[labeling.interface]
    xy = g.node_xy
    mid = 0.5 * (xy[e[:, 0]] + xy[e[:, 1]])
    half = 0.5 * g.h
    # horizontal edge -> vertical dual segment and vice versa
    off = np.where(d[:, None] == 0, [0.0, half], [half, 0.0])
    return np.stack([mid - off, mid + off], axis=1)


def render_svg(path, domain: Domain, labeling: PartitionLabeling | None = None, poles=None, euler: EulerData | None = None,
               title: str = ""):
    tf = _Transform(domain)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_SIZE}" height="{SVG_SIZE}" viewBox="0 0 {SVG_SIZE} {SVG_SIZE}">',
        f"<title>{title}</title>" if title else "",
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    if labeling is not None and labeling.grid.num_nodes <= LABEL_FILL_LIMIT:
        g = labeling.grid
        s = g.h * tf.scale
        for (x, y), lab in zip(g.node_xy, labeling.labels):
            px, py = tf(x, y)
            color = _PALETTE[(lab - 1) % len(_PALETTE)]
            parts.append(f'<rect x="{px - s / 2:.3f}" y="{py - s / 2:.3f}" width="{s:.3f}" height="{s:.3f}" fill="{color}" fill-opacity="0.35"/>')
    parts.append(_shape_svg(domain.outer, tf, 'fill="none" stroke="black" stroke-width="2"'))
    for hole in domain.holes:
        parts.append(_shape_svg(hole.shape, tf, 'fill="#dddddd" stroke="black" stroke-width="2"'))
    if labeling is not None:
        segs = interface_segments(labeling)
        if len(segs):
            d = " ".join(
                "M{:.3f},{:.3f}L{:.3f},{:.3f}".format(*tf(*a), *tf(*b)) for a, b in segs
            )
            parts.append(f'<path class="interface" d="{d}" stroke="black" stroke-width="1.5" fill="none"/>')
    if poles is not None:
        for x, y in poles.xy:
            px, py = tf(x, y)
            parts.append(f'<circle class="pole" cx="{px:.3f}" cy="{py:.3f}" r="4" fill="red"/>')
    if euler is not None:
        for c in euler.critical:
            px, py = tf(c.x, c.y)
            parts.append(f'<rect class="critical" x="{px - 4:.3f}" y="{py - 4:.3f}" width="8" height="8" fill="none" stroke="blue" stroke-width="1.5"/>')
            parts.append(f'<text x="{px + 6:.3f}" y="{py - 6:.3f}" font-size="10" fill="blue">{c.nu}</text>')
        for b in euler.boundary:
            px, py = tf(b.x, b.y)
            parts.append(f'<circle class="boundary-point" cx="{px:.3f}" cy="{py:.3f}" r="3" fill="none" stroke="green" stroke-width="1.5"/>')
    parts.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(p for p in parts if p) + "\n")
    return path
