"""Analytic planar domains (outer shape minus holes) and pole-set validation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DuplicatePole, InvalidDomain, PoleOutsideDomain, TwoPolesInOneHole

DUPLICATE_TOL = 1e-12

# region codes returned by ``Domain.region``; holes are 1 + hole index
EXTERIOR = -1
INTERIOR = 0


def _segment_distance(px, py, ax, ay, bx, by):
    """Distance from points (px, py) to the segment [a, b] (broadcasting)."""
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    t = np.where(L2 > 0, ((px - ax) * dx + (py - ay) * dy) / np.where(L2 > 0, L2, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    # (p - a) - t d rather than p - (a + t d): exact zero for points on the segment
    return np.hypot((px - ax) - t * dx, (py - ay) - t * dy)


def _segments_cross(p1, p2, q1, q2):
    def orient(a, b, c):
        return np.sign((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    # collinear overlap
    def on_seg(a, b, c):
        return min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])

    return (
        (o1 == 0 and on_seg(p1, p2, q1))
        or (o2 == 0 and on_seg(p1, p2, q2))
        or (o3 == 0 and on_seg(q1, q2, p1))
        or (o4 == 0 and on_seg(q1, q2, p2))
    )


class Shape:
    """Base class: subclasses provide a signed distance that is positive inside."""

    def sdist(self, x, y):
        raise NotImplementedError

    def bbox(self):
        raise NotImplementedError

    def boundary_samples(self, count=256):
        raise NotImplementedError

    @property
    def area(self):
        raise NotImplementedError

    @property
    def centroid(self):
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Rectangle(Shape):
    width: float
    height: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise InvalidDomain("domain", "rectangle needs positive width and height")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    def sdist(self, x, y):
        x0, y0 = self.origin
        dx = np.minimum(np.asarray(x) - x0, x0 + self.width - np.asarray(x))
        dy = np.minimum(np.asarray(y) - y0, y0 + self.height - np.asarray(y))
        inside = np.minimum(dx, dy)
        # outside distance is only used for its sign and for tolerance tests near the boundary
        outside = -np.hypot(np.minimum(dx, 0.0), np.minimum(dy, 0.0))
        return np.where((dx > 0) & (dy > 0), inside, np.where((dx >= 0) & (dy >= 0), 0.0, outside))

    def bbox(self):
        x0, y0 = self.origin
        return (x0, y0, x0 + self.width, y0 + self.height)

    def boundary_samples(self, count=256):
        x0, y0, x1, y1 = self.bbox()
        t = np.linspace(0.0, 1.0, count // 4, endpoint=False)
        xs = np.concatenate([x0 + t * self.width, np.full_like(t, x1), x1 - t * self.width, np.full_like(t, x0)])
        ys = np.concatenate([np.full_like(t, y0), y0 + t * self.height, np.full_like(t, y1), y1 - t * self.height])
        return np.column_stack([xs, ys])

    @property
    def area(self):
        return self.width * self.height

    @property
    def centroid(self):
        return (self.origin[0] + self.width / 2, self.origin[1] + self.height / 2)

    @property
    def inradius(self):
        return min(self.width, self.height) / 2

    def to_dict(self):
        if self.width == self.height and self.origin == (0.0, 0.0):
            return {"type": "square", "side": self.width}
        return {"type": "rectangle", "width": self.width, "height": self.height, "origin": list(self.origin)}


@dataclass(frozen=True)
class Disk(Shape):
    radius: float
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidDomain("domain", "disk needs a positive radius")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    def sdist(self, x, y):
        cx, cy = self.center
        return self.radius - np.hypot(np.asarray(x) - cx, np.asarray(y) - cy)

    def bbox(self):
        cx, cy = self.center
        r = self.radius
        return (cx - r, cy - r, cx + r, cy + r)

    def boundary_samples(self, count=256):
        t = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
        cx, cy = self.center
        return np.column_stack([cx + self.radius * np.cos(t), cy + self.radius * np.sin(t)])

    @property
    def area(self):
        return np.pi * self.radius**2

    @property
    def centroid(self):
        return self.center

    @property
    def inradius(self):
        return self.radius

    def to_dict(self):
        return {"type": "disk", "radius": self.radius, "center": list(self.center)}


@dataclass(frozen=True)
class Polygon(Shape):
    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 3:
            raise InvalidDomain("domain", "polygon needs at least 3 vertices")
        if abs(self._signed_area()) <= 0:
            raise InvalidDomain("domain", "polygon has zero area")
        if not self._is_simple():
            raise InvalidDomain("domain", "polygon is not simple")

    def _signed_area(self):
        v = np.asarray(self.vertices)
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def _is_simple(self):
        v = self.vertices
        m = len(v)
        for i in range(m):
            a1, a2 = v[i], v[(i + 1) % m]
            for j in range(i + 1, m):
                # adjacent edges share a vertex by construction
                if j == i + 1 or (i == 0 and j == m - 1):
                    continue
                if _segments_cross(a1, a2, v[j], v[(j + 1) % m]):
                    return False
        return len(set(v)) == m

    def sdist(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        v = np.asarray(self.vertices)
        a = v
        b = np.roll(v, -1, axis=0)
        d = np.full(np.broadcast(x, y).shape, np.inf)
        inside = np.zeros(d.shape, dtype=bool)
        for (ax, ay), (bx, by) in zip(a, b):
            d = np.minimum(d, _segment_distance(x, y, ax, ay, bx, by))
            # even-odd ray casting towards +x
            cond = (ay > y) != (by > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xc = ax + (y - ay) * (bx - ax) / (by - ay)
            inside ^= cond & (x < xc)
        return np.where(inside, d, -d)

    def bbox(self):
        v = np.asarray(self.vertices)
        return (v[:, 0].min(), v[:, 1].min(), v[:, 0].max(), v[:, 1].max())

    def boundary_samples(self, count=256):
        v = np.asarray(self.vertices)
        per = max(2, count // len(v))
        t = np.linspace(0.0, 1.0, per, endpoint=False)[:, None]
        pts = [a + t * (b - a) for a, b in zip(v, np.roll(v, -1, axis=0))]
        return np.concatenate(pts)

    @property
    def area(self):
        return abs(self._signed_area())

    @property
    def centroid(self):
        v = np.asarray(self.vertices)
        x, y = v[:, 0], v[:, 1]
        cross = x * np.roll(y, -1) - np.roll(x, -1) * y
        A = 0.5 * cross.sum()
        return (
            float(((x + np.roll(x, -1)) * cross).sum() / (6 * A)),
            float(((y + np.roll(y, -1)) * cross).sum() / (6 * A)),
        )

    @property
    def inradius(self):
        c = self.centroid
        return float(max(self.sdist(c[0], c[1]), 0.0))

    def to_dict(self):
        return {"type": "polygon", "vertices": [list(p) for p in self.vertices]}


@dataclass(frozen=True)
class Hole:
    shape: Shape
    index: int

    def __post_init__(self):
        if not isinstance(self.shape, (Disk, Polygon, Rectangle)):
            raise InvalidDomain("domain.holes", "holes must be disks or polygons")


class Membership(NamedTuple):
    kind: str  # "interior" | "hole" | "exterior" | "boundary-adjacent"
    hole: int | None = None

    def __str__(self):
        return f"hole({self.hole})" if self.kind == "hole" else self.kind


@dataclass(frozen=True)
class Domain:
    """Outer shape minus a tuple of disjoint closed holes."""

    outer: Shape
    holes: tuple[Hole, ...] = field(default_factory=tuple)

    def __post_init__(self):
        holes = tuple(h if isinstance(h, Hole) else Hole(h, i) for i, h in enumerate(self.holes))
        object.__setattr__(self, "holes", holes)
        for i, hole in enumerate(holes):
            if hole.index != i:
                raise InvalidDomain("domain.holes", "hole indices must be 0..m-1 in order")
            pts = hole.shape.boundary_samples(512)
            if np.any(self.outer.sdist(pts[:, 0], pts[:, 1]) <= 0):
                raise InvalidDomain(f"domain.holes[{i}]", "hole must lie strictly inside the outer shape")
            for j, other in enumerate(holes[:i]):
                qs = other.shape.boundary_samples(512)
                if np.any(other.shape.sdist(pts[:, 0], pts[:, 1]) >= 0) or np.any(
                    hole.shape.sdist(qs[:, 0], qs[:, 1]) >= 0
                ):
                    raise InvalidDomain(f"domain.holes[{i}]", f"hole overlaps hole {j}")

    def bbox(self):
        return self.outer.bbox()

    @property
    def extent(self):
        x0, y0, x1, y1 = self.bbox()
        return max(x1 - x0, y1 - y0)

    def region(self, x, y):
        """Vectorized region codes: EXTERIOR, INTERIOR, or 1 + hole index.

        Points exactly on the outer boundary or on a hole boundary count as exterior.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        code = np.where(self.outer.sdist(x, y) > 0, INTERIOR, EXTERIOR)
        for hole in self.holes:
            s = hole.shape.sdist(x, y)
            code = np.where((code != EXTERIOR) & (s > 0), hole.index + 1, code)
            code = np.where((code == INTERIOR) & (s == 0), EXTERIOR, code)
        return code

    def boundary_distance(self, x, y):
        """Unsigned distance to the nearest piece of the boundary (outer or hole)."""
        d = np.abs(self.outer.sdist(x, y))
        for hole in self.holes:
            d = np.minimum(d, np.abs(hole.shape.sdist(x, y)))
        return d

    def to_dict(self):
        d = self.outer.to_dict()
        if self.holes:
            d["holes"] = [h.shape.to_dict() for h in self.holes]
        return d


def unit_square():
    return Domain(Rectangle(1.0, 1.0))


def unit_disk():
    return Domain(Disk(1.0))


def contains(domain: Domain, p, tol: float = 0.0) -> Membership:
    """Classify a point; ``tol`` is the boundary-adjacency band (usually the grid spacing)."""
    x, y = float(p[0]), float(p[1])
    code = int(domain.region(x, y))
    if code == EXTERIOR:
        return Membership("exterior")
    if code > 0:
        return Membership("hole", code - 1)
    if tol > 0 and float(domain.boundary_distance(x, y)) < tol:
        return Membership("boundary-adjacent")
    return Membership("interior")


@dataclass(frozen=True)
class PoleSet:
    """Half-flux pole positions with placement tags (None = in the domain, else hole index)."""

    poles: tuple[tuple[float, float], ...] = ()
    placement: tuple[int | None, ...] = ()

    def __len__(self):
        return len(self.poles)

    def __iter__(self):
        return iter(self.poles)

    @property
    def xy(self):
        return np.asarray(self.poles, dtype=float).reshape(-1, 2)

    @property
    def in_domain(self):
        return tuple(i for i, h in enumerate(self.placement) if h is None)


def validate_pole_set(domain: Domain, candidate: Sequence[Sequence[float]]) -> PoleSet:
    pts = [(float(p[0]), float(p[1])) for p in candidate]
    for i in range(len(pts)):
        for j in range(i):
            if np.hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]) < DUPLICATE_TOL:
                raise DuplicatePole("poles", f"poles {j} and {i} coincide")
    placement = []
    used = {}
    for i, p in enumerate(pts):
        m = contains(domain, p)
        if m.kind == "exterior":
            raise PoleOutsideDomain("poles", f"pole {i} at {p} is outside the domain")
        if m.kind == "hole":
            if m.hole in used:
                raise TwoPolesInOneHole("poles", f"poles {used[m.hole]} and {i} are both in hole {m.hole}")
            used[m.hole] = i
            placement.append(m.hole)
        else:
            placement.append(None)
    return PoleSet(tuple(pts), tuple(placement))
