"""Planar primitives for point and segment opinions.

Everything here works in flat map units.  Scalar functions operate on the
immutable :class:`Point`, :class:`Segment` and :class:`ConvexRegion` values;
the ``*_block`` helpers at the bottom are numpy versions of the same
formulas, written with the same operation order so both paths agree
bit-for-bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

EPSILON = 1e-9


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        x, y = float(self.x), float(self.y)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError(f"non-finite coordinate in point ({self.x}, {self.y})")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __iter__(self):
        yield self.x
        yield self.y


@dataclass(frozen=True)
class Segment:
    """An ordered pair of distinct endpoints with a representable squared length."""

    a: Point
    b: Point

    def __post_init__(self):
        if not isinstance(self.a, Point):
            object.__setattr__(self, "a", Point(*self.a))
        if not isinstance(self.b, Point):
            object.__setattr__(self, "b", Point(*self.b))
        dx, dy = self.b.x - self.a.x, self.b.y - self.a.y
        # a squared length that underflows is as unusable as a zero one
        if dx * dx + dy * dy == 0.0:
            raise ValueError(f"degenerate segment at ({self.a.x}, {self.a.y})")

    @classmethod
    def from_coords(cls, x1, y1, x2, y2) -> "Segment":
        return cls(Point(x1, y1), Point(x2, y2))

    @property
    def length(self) -> float:
        return point_distance(self.a, self.b)

    def endpoint(self, which: int) -> Point:
        if which == 0:
            return self.a
        if which == 1:
            return self.b
        raise ValueError(f"endpoint selector must be 0 or 1, got {which!r}")

    def coords(self) -> tuple[float, float, float, float]:
        return (self.a.x, self.a.y, self.b.x, self.b.y)


def _cross(ox, oy, ax, ay, bx, by) -> float:
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


@dataclass(frozen=True)
class ConvexRegion:
    """Convex polygon, stored counter-clockwise.

    Clockwise input is reversed.  Collinear or reflex corners and
    self-intersecting outlines raise ``ValueError``.
    """

    vertices: tuple[Point, ...]

    def __post_init__(self):
        verts = tuple(v if isinstance(v, Point) else Point(*v) for v in self.vertices)
        if len(verts) < 3:
            raise ValueError("a region needs at least 3 vertices")
        n = len(verts)
        crosses = [
            _cross(verts[i].x, verts[i].y, verts[(i + 1) % n].x, verts[(i + 1) % n].y,
                   verts[(i + 2) % n].x, verts[(i + 2) % n].y)
            for i in range(n)
        ]
        if all(c < 0 for c in crosses):
            verts = verts[::-1]
        elif not all(c > 0 for c in crosses):
            raise ValueError("region vertices do not form a strictly convex polygon")
        # same-sign turns still admit star polygons; every vertex must sit
        # on the inner side of every edge
        for i in range(n):
            p, q = verts[i], verts[(i + 1) % n]
            for v in verts:
                if _cross(p.x, p.y, q.x, q.y, v.x, v.y) < 0:
                    raise ValueError("region outline is self-intersecting")
        object.__setattr__(self, "vertices", verts)

    @classmethod
    def rectangle(cls, x0, y0, x1, y1) -> "ConvexRegion":
        return cls((Point(x0, y0), Point(x1, y0), Point(x1, y1), Point(x0, y1)))

    def edges(self) -> list[Segment]:
        n = len(self.vertices)
        return [Segment(self.vertices[i], self.vertices[(i + 1) % n]) for i in range(n)]

    def bounds(self) -> tuple[float, float, float, float]:
        xs = [v.x for v in self.vertices]
        ys = [v.y for v in self.vertices]
        return min(xs), min(ys), max(xs), max(ys)

    def centroid(self) -> Point:
        n = len(self.vertices)
        return Point(sum(v.x for v in self.vertices) / n, sum(v.y for v in self.vertices) / n)


def point_distance(p: Point, q: Point) -> float:
    dx = p.x - q.x
    dy = p.y - q.y
    return math.sqrt(dx * dx + dy * dy)


def point_segment_distance(p: Point, s: Segment) -> float:
    ax, ay, bx, by = s.a.x, s.a.y, s.b.x, s.b.y
    dx = bx - ax
    dy = by - ay
    t = ((p.x - ax) * dx + (p.y - ay) * dy) / (dx * dx + dy * dy)
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    ex = p.x - (ax + t * dx)
    ey = p.y - (ay + t * dy)
    return math.sqrt(ex * ex + ey * ey)


def _on_box(px, py, ax, ay, bx, by) -> bool:
    return min(ax, bx) <= px <= max(ax, bx) and min(ay, by) <= py <= max(ay, by)


def segments_intersect(s: Segment, t: Segment) -> bool:
    """True when the closed segments share a point (touching counts)."""
    p1x, p1y, p2x, p2y = s.a.x, s.a.y, s.b.x, s.b.y
    q1x, q1y, q2x, q2y = t.a.x, t.a.y, t.b.x, t.b.y
    if (max(p1x, p2x) < min(q1x, q2x) or max(q1x, q2x) < min(p1x, p2x)
            or max(p1y, p2y) < min(q1y, q2y) or max(q1y, q2y) < min(p1y, p2y)):
        return False
    d1 = _cross(q1x, q1y, q2x, q2y, p1x, p1y)
    d2 = _cross(q1x, q1y, q2x, q2y, p2x, p2y)
    d3 = _cross(p1x, p1y, p2x, p2y, q1x, q1y)
    d4 = _cross(p1x, p1y, p2x, p2y, q2x, q2y)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return True
    if d1 == 0 and _on_box(p1x, p1y, q1x, q1y, q2x, q2y):
        return True
    if d2 == 0 and _on_box(p2x, p2y, q1x, q1y, q2x, q2y):
        return True
    if d3 == 0 and _on_box(q1x, q1y, p1x, p1y, p2x, p2y):
        return True
    if d4 == 0 and _on_box(q2x, q2y, p1x, p1y, p2x, p2y):
        return True
    return False


def directed_hausdorff(s: Segment, t: Segment) -> float:
    """sup over points of ``s`` of the distance to ``t``; attained at an endpoint."""
    return max(point_segment_distance(s.a, t), point_segment_distance(s.b, t))


def hausdorff_distance(s: Segment, t: Segment) -> float:
    """Symmetric Hausdorff distance between two segments, in closed form.

    Distance to a convex set is convex along a segment, so each directed
    supremum sits at one of the two endpoints.
    """
    return max(
        point_segment_distance(s.a, t),
        point_segment_distance(s.b, t),
        point_segment_distance(t.a, s),
        point_segment_distance(t.b, s),
    )


def endpoint_gap(s: Segment, t: Segment) -> float:
    return min(
        point_distance(s.a, t.a),
        point_distance(s.a, t.b),
        point_distance(s.b, t.a),
        point_distance(s.b, t.b),
    )


def clustering_distance_d2(s: Segment, t: Segment) -> float:
    """0 for intersecting segments, otherwise the closest endpoint pair."""
    if segments_intersect(s, t):
        return 0.0
    return endpoint_gap(s, t)


def point_in_region(p: Point, r: ConvexRegion, epsilon: float = EPSILON) -> bool:
    verts = r.vertices
    n = len(verts)
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        ex, ey = b.x - a.x, b.y - a.y
        c = ex * (p.y - a.y) - ey * (p.x - a.x)
        if c < 0 and -c / math.sqrt(ex * ex + ey * ey) > epsilon:
            return False
    return True


def segment_in_region(s: Segment, r: ConvexRegion, epsilon: float = EPSILON) -> bool:
    return point_in_region(s.a, r, epsilon) and point_in_region(s.b, r, epsilon)


def touches_any(s: Segment, background: Iterable[Segment], epsilon: float = EPSILON) -> bool:
    """Whether an endpoint of ``s`` lies within ``epsilon`` of some background segment."""
    for b in background:
        if point_segment_distance(s.a, b) <= epsilon or point_segment_distance(s.b, b) <= epsilon:
            return True
    return False


def _ray_hit(ox, oy, dx, dy, b: Segment) -> Optional[float]:
    """Smallest parameter t >= 1 with o + t*d on ``b``, or None."""
    ux, uy = b.b.x - b.a.x, b.b.y - b.a.y
    wx, wy = b.a.x - ox, b.a.y - oy
    denom = dx * uy - dy * ux
    if denom != 0.0:
        t = (wx * uy - wy * ux) / denom
        u = (wx * dy - wy * dx) / denom
        if t >= 1.0 and 0.0 <= u <= 1.0:
            return t
        return None
    # parallel: only a collinear background segment can be hit
    if wx * dy - wy * dx != 0.0:
        return None
    dd = dx * dx + dy * dy
    t0 = (wx * dx + wy * dy) / dd
    t1 = ((b.b.x - ox) * dx + (b.b.y - oy) * dy) / dd
    lo, hi = min(t0, t1), max(t0, t1)
    if hi < 1.0:
        return None
    return max(lo, 1.0)


def extend_to_nearest(s: Segment, from_endpoint: int, background: Sequence[Segment]) -> Optional[Segment]:
    """Extend ``s`` beyond ``from_endpoint`` until it meets the first background segment.

    The ray starts at the other endpoint and passes through the selected
    one.  The selected endpoint is replaced by the hit point, so endpoint
    order is kept.  Returns None when the ray meets nothing.
    """
    fixed = s.endpoint(1 - from_endpoint)
    moving = s.endpoint(from_endpoint)
    dx, dy = moving.x - fixed.x, moving.y - fixed.y
    best = None
    for b in background:
        t = _ray_hit(fixed.x, fixed.y, dx, dy, b)
        if t is not None and (best is None or t < best):
            best = t
    if best is None:
        return None
    hit = Point(fixed.x + best * dx, fixed.y + best * dy)
    if from_endpoint == 0:
        return Segment(hit, fixed)
    return Segment(fixed, hit)


# ---------------------------------------------------------------------------
# vectorised forms
# ---------------------------------------------------------------------------

def segments_to_array(segments: Sequence[Segment]) -> np.ndarray:
    if not len(segments):
        return np.zeros((0, 4))
    return np.array([s.coords() for s in segments], dtype=np.float64)


def points_to_array(points: Sequence[Point]) -> np.ndarray:
    if not len(points):
        return np.zeros((0, 2))
    return np.array([(p.x, p.y) for p in points], dtype=np.float64)


def _cross_v(ox, oy, ax, ay, bx, by):
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def _on_box_v(px, py, ax, ay, bx, by):
    return ((np.minimum(ax, bx) <= px) & (px <= np.maximum(ax, bx))
            & (np.minimum(ay, by) <= py) & (py <= np.maximum(ay, by)))


def intersect_pairs(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Row-wise ``segments_intersect`` for two (n,4) arrays."""
    p1x, p1y, p2x, p2y = A.T
    q1x, q1y, q2x, q2y = B.T
    d1 = _cross_v(q1x, q1y, q2x, q2y, p1x, p1y)
    d2 = _cross_v(q1x, q1y, q2x, q2y, p2x, p2y)
    d3 = _cross_v(p1x, p1y, p2x, p2y, q1x, q1y)
    d4 = _cross_v(p1x, p1y, p2x, p2y, q2x, q2y)
    proper = (((d1 > 0) & (d2 < 0)) | ((d1 < 0) & (d2 > 0))) & (((d3 > 0) & (d4 < 0)) | ((d3 < 0) & (d4 > 0)))
    touch = ((d1 == 0) & _on_box_v(p1x, p1y, q1x, q1y, q2x, q2y))
    touch |= ((d2 == 0) & _on_box_v(p2x, p2y, q1x, q1y, q2x, q2y))
    touch |= ((d3 == 0) & _on_box_v(q1x, q1y, p1x, p1y, p2x, p2y))
    touch |= ((d4 == 0) & _on_box_v(q2x, q2y, p1x, p1y, p2x, p2y))
    return proper | touch


def intersect_block(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Pairwise ``segments_intersect`` for (n,4) and (m,4) arrays -> (n,m) bool."""
    ii, jj = np.meshgrid(np.arange(len(A)), np.arange(len(B)), indexing="ij")
    return intersect_pairs(A[ii.ravel()], B[jj.ravel()]).reshape(len(A), len(B))


def _sq_v(ax, ay, bx, by):
    dx = ax - bx
    dy = ay - by
    return dx * dx + dy * dy


def d2_block(A: np.ndarray, B: np.ndarray, box_a: np.ndarray = None, box_b: np.ndarray = None) -> np.ndarray:
    """Pairwise ``clustering_distance_d2`` between segment arrays."""
    p1x, p1y, p2x, p2y = (A[:, i:i + 1] for i in range(4))
    q1x, q1y, q2x, q2y = (B[None, :, i] for i in range(4))
    sq = np.minimum(
        np.minimum(_sq_v(p1x, p1y, q1x, q1y), _sq_v(p1x, p1y, q2x, q2y)),
        np.minimum(_sq_v(p2x, p2y, q1x, q1y), _sq_v(p2x, p2y, q2x, q2y)),
    )
    gap = np.sqrt(sq)
    if box_a is None:
        box_a = segment_bboxes(A)
    if box_b is None:
        box_b = segment_bboxes(B)
    overlap = ((box_a[:, 0:1] <= box_b[None, :, 2]) & (box_b[None, :, 0] <= box_a[:, 2:3])
               & (box_a[:, 1:2] <= box_b[None, :, 3]) & (box_b[None, :, 1] <= box_a[:, 3:4]))
    ii, jj = np.nonzero(overlap)
    if len(ii):
        hit = intersect_pairs(A[ii], B[jj])
        gap[ii[hit], jj[hit]] = 0.0
    return gap


def point_segment_distance_v(px, py, S: np.ndarray) -> np.ndarray:
    """Distance from points (broadcast) to segments given as columns of ``S``."""
    ax, ay, bx, by = S[..., 0], S[..., 1], S[..., 2], S[..., 3]
    dx = bx - ax
    dy = by - ay
    t = ((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy)
    t = np.clip(t, 0.0, 1.0)
    ex = px - (ax + t * dx)
    ey = py - (ay + t * dy)
    return np.sqrt(ex * ex + ey * ey)


def hausdorff_one_to_many(s: Segment, S: np.ndarray) -> np.ndarray:
    """``hausdorff_distance(s, t)`` for every row ``t`` of ``S``."""
    if len(S) == 0:
        return np.zeros(0)
    own = np.array([s.coords()])
    return np.maximum(
        np.maximum(point_segment_distance_v(s.a.x, s.a.y, S), point_segment_distance_v(s.b.x, s.b.y, S)),
        np.maximum(point_segment_distance_v(S[:, 0], S[:, 1], own), point_segment_distance_v(S[:, 2], S[:, 3], own)),
    )


def points_in_region_v(px, py, r: ConvexRegion, epsilon: float = EPSILON) -> np.ndarray:
    """``point_in_region`` over arrays of coordinates."""
    px = np.asarray(px, dtype=np.float64)
    py = np.asarray(py, dtype=np.float64)
    inside = np.ones(px.shape, dtype=bool)
    verts = r.vertices
    for i in range(len(verts)):
        a, b = verts[i], verts[(i + 1) % len(verts)]
        ex, ey = b.x - a.x, b.y - a.y
        c = ex * (py - a.y) - ey * (px - a.x)
        inside &= ~((c < 0) & (-c / math.sqrt(ex * ex + ey * ey) > epsilon))
    return inside


def touches_any_v(S: np.ndarray, background: Sequence[Segment], epsilon: float = EPSILON) -> np.ndarray:
    """``touches_any`` for every row of a segment array."""
    hit = np.zeros(len(S), dtype=bool)
    for b in background:
        B = np.array([b.coords()])
        hit |= point_segment_distance_v(S[:, 0], S[:, 1], B) <= epsilon
        hit |= point_segment_distance_v(S[:, 2], S[:, 3], B) <= epsilon
    return hit


def euclidean_block(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    dx = P[:, 0:1] - Q[None, :, 0]
    dy = P[:, 1:2] - Q[None, :, 1]
    return np.sqrt(dx * dx + dy * dy)


def segment_bboxes(S: np.ndarray) -> np.ndarray:
    return np.column_stack([
        np.minimum(S[:, 0], S[:, 2]), np.minimum(S[:, 1], S[:, 3]),
        np.maximum(S[:, 0], S[:, 2]), np.maximum(S[:, 1], S[:, 3]),
    ])


def box_gap_block(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Euclidean gap between axis-aligned boxes (minx, miny, maxx, maxy)."""
    dx = np.maximum(0.0, np.maximum(B[None, :, 0] - A[:, 2:3], A[:, 0:1] - B[None, :, 2]))
    dy = np.maximum(0.0, np.maximum(B[None, :, 1] - A[:, 3:4], A[:, 1:2] - B[None, :, 3]))
    return np.sqrt(dx * dx + dy * dy)
