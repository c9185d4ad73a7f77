"""Seeded k-medoids over an arbitrary item set and distance.

Items are referred to by their position in the input list (their id).
Ties are always broken towards the lowest id.

Distances are evaluated through an oracle that produces blocks of the
distance matrix.  Segment items under the d2 clustering distance and point
items under Euclidean distance get vectorised oracles that also expose
bounding boxes; any other distance falls back to calling the scalar
function pair by pair.  Bounding boxes let medoid search skip most of the
exact cost evaluations on large clusters while still returning the exact
minimiser.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import geometry
from .geometry import Point, Segment

# clusters up to this size are scanned exhaustively
_EXHAUSTIVE = 200
_EVAL_CHUNK = 32
_REFINE_CHUNK = 1024
_LB_SLACK = 1e-9
_DIRECTIONS = 8


class PairwiseOracle:
    """Distance oracle backed by a scalar ``fn(a, b)``."""

    boxes = None

    def __init__(self, items: Sequence, fn: Callable):
        self.items = list(items)
        self.fn = fn

    def __len__(self):
        return len(self.items)

    def block(self, rows, cols) -> np.ndarray:
        out = np.empty((len(rows), len(cols)))
        for i, r in enumerate(rows):
            a = self.items[r]
            for j, c in enumerate(cols):
                out[i, j] = self.fn(a, self.items[c])
        return out


class SegmentD2Oracle:
    def __init__(self, segments: Sequence[Segment]):
        self.coords = geometry.segments_to_array(segments)
        self.boxes = geometry.segment_bboxes(self.coords)
        self.mids = 0.5 * (self.coords[:, 0:2] + self.coords[:, 2:4])
        self.halves = 0.5 * np.hypot(self.coords[:, 2] - self.coords[:, 0], self.coords[:, 3] - self.coords[:, 1])
        self.ends = self.coords

    def __len__(self):
        return len(self.coords)

    def block(self, rows, cols) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.intp)
        cols = np.asarray(cols, dtype=np.intp)
        return geometry.d2_block(self.coords[rows], self.coords[cols], self.boxes[rows], self.boxes[cols])

    def to_points(self, rows, px, py) -> np.ndarray:
        """Distance from each item in ``rows`` to each point (px, py)."""
        S = self.coords[np.asarray(rows, dtype=np.intp)][:, None, :]
        return geometry.point_segment_distance_v(px[None, :], py[None, :], S)


class EuclideanOracle:
    def __init__(self, points: Sequence[Point]):
        self.coords = geometry.points_to_array(points)
        self.boxes = np.column_stack([self.coords, self.coords])
        self.mids = self.coords
        self.halves = np.zeros(len(self.coords))
        self.ends = np.column_stack([self.coords, self.coords])

    def __len__(self):
        return len(self.coords)

    def block(self, rows, cols) -> np.ndarray:
        return geometry.euclidean_block(self.coords[np.asarray(rows, dtype=np.intp)],
                                        self.coords[np.asarray(cols, dtype=np.intp)])

    def to_points(self, rows, px, py) -> np.ndarray:
        return geometry.euclidean_block(self.coords[np.asarray(rows, dtype=np.intp)], np.column_stack([px, py]))


def make_oracle(items: Sequence, distance: Callable):
    if len(items):
        if distance is geometry.clustering_distance_d2 and all(isinstance(i, Segment) for i in items):
            return SegmentD2Oracle(items)
        if distance is geometry.point_distance and all(isinstance(i, Point) for i in items):
            return EuclideanOracle(items)
    return PairwiseOracle(items, distance)


def cost(item, cluster: Sequence, distance: Callable) -> float:
    """Sum of ``distance(item, member)`` over the cluster."""
    if not len(cluster):
        return 0.0
    return float(np.sum(np.array([distance(item, m) for m in cluster], dtype=np.float64)))


class _Groups:
    """Per-bucket summaries used to lower-bound a candidate's cost."""

    def __init__(self, box, count, mid, halves):
        self.box = box
        self.count = count
        self.mid = mid
        self.halves = halves

    def lower_bounds(self, oracle, rows) -> np.ndarray:
        """Lower bound on sum of distances from each row to all grouped members.

        Two bounds per bucket, take the larger: population times the gap
        to the bucket's box, and a convexity bound from the distance to the
        mean midpoint minus the summed half-lengths.
        """
        by_box = geometry.box_gap_block(oracle.boxes[rows], self.box) * self.count
        f = oracle.to_points(rows, self.mid[:, 0], self.mid[:, 1])
        raw = f * self.count - self.halves
        by_mean = raw - 1e-12 * (f * self.count + self.halves)
        lb = np.maximum(by_box, by_mean).sum(axis=1)
        return lb * (1.0 - _LB_SLACK)


class _Projections:
    """Lower bounds from projecting everything onto a few fixed directions.

    Projection never increases distances, so the gap between the projected
    intervals of two segments bounds d2 from below (and is 0 whenever they
    intersect).  Summed over a cluster this is a 1-D problem solved with
    sorted prefix sums.  For parallel segments it is exact.
    """

    def __init__(self, oracle, members: np.ndarray):
        self.oracle = oracle
        E = oracle.ends[members]
        self.n = len(members)
        self.dirs = []
        for k in range(_DIRECTIONS):
            ang = math.pi * k / _DIRECTIONS
            vx, vy = math.cos(ang), math.sin(ang)
            p = E[:, 0] * vx + E[:, 1] * vy
            q = E[:, 2] * vx + E[:, 3] * vy
            lo = np.sort(np.minimum(p, q))
            hi = np.sort(np.maximum(p, q))
            self.dirs.append((vx, vy, lo, np.concatenate([[0.0], np.cumsum(lo)]),
                              hi, np.concatenate([[0.0], np.cumsum(hi)])))
        # bound on rounding in the prefix sums
        self.scale = 4.0 * (self.n + 2) * np.finfo(float).eps

    def lower_bounds(self, rows) -> np.ndarray:
        E = self.oracle.ends[rows]
        best = np.zeros(len(rows))
        for vx, vy, lo, clo, hi, chi in self.dirs:
            p = E[:, 0] * vx + E[:, 1] * vy
            q = E[:, 2] * vx + E[:, 3] * vy
            g1, g2 = np.minimum(p, q), np.maximum(p, q)
            i = np.searchsorted(lo, g2, side="right")
            above = (clo[-1] - clo[i]) - (self.n - i) * g2
            j = np.searchsorted(hi, g1, side="left")
            below = j * g1 - chi[j]
            mag = np.abs(clo[-1]) + np.abs(chi[-1]) + self.n * (np.abs(g1) + np.abs(g2))
            best = np.maximum(best, above + below - self.scale * mag)
        return best


def _grid_groups(oracle, members: np.ndarray, g: int) -> _Groups:
    """Bucket members on a g x g grid of their box centres."""
    boxes = oracle.boxes[members]
    cx = 0.5 * (boxes[:, 0] + boxes[:, 2])
    cy = 0.5 * (boxes[:, 1] + boxes[:, 3])
    x0, y0 = cx.min(), cy.min()
    wx = (cx.max() - x0) / g or 1.0
    wy = (cy.max() - y0) / g or 1.0
    ix = np.minimum((cx - x0) // wx, g - 1).astype(np.intp)
    iy = np.minimum((cy - y0) // wy, g - 1).astype(np.intp)
    _, inv = np.unique(ix * g + iy, return_inverse=True)
    n = inv.max() + 1
    gb = np.empty((n, 4))
    gb[:, 0:2] = np.inf
    gb[:, 2:4] = -np.inf
    np.minimum.at(gb[:, 0], inv, boxes[:, 0])
    np.minimum.at(gb[:, 1], inv, boxes[:, 1])
    np.maximum.at(gb[:, 2], inv, boxes[:, 2])
    np.maximum.at(gb[:, 3], inv, boxes[:, 3])
    count = np.bincount(inv, minlength=n).astype(np.float64)
    mids = oracle.mids[members]
    mean = np.column_stack([np.bincount(inv, mids[:, 0], n), np.bincount(inv, mids[:, 1], n)]) / count[:, None]
    return _Groups(gb, count, mean, np.bincount(inv, oracle.halves[members], n))


class CostOrder:
    """Candidates of one cluster in ascending (cost, id) order, produced lazily.

    ``order[k]`` is the ``(cost, id)`` pair of the k-th cheapest candidate.
    Costs are sums of distances to every member of the cluster.  On large
    clusters candidates are screened with box lower bounds at two grid
    resolutions; a candidate is only released once every unevaluated
    candidate has a lower bound strictly above its cost, so the order is
    exact.
    """

    def __init__(self, oracle, members: Sequence[int], candidates: Optional[Sequence[int]] = None):
        self.oracle = oracle
        self.members = np.asarray(members, dtype=np.intp)
        cands = self.members if candidates is None else np.asarray(candidates, dtype=np.intp)
        self._done: list[tuple[float, int]] = []
        self._evaluated: list[tuple[float, int]] = []
        self._fine: list[tuple[float, int]] = []
        self.evaluations = 0
        self._pos = 0
        boxes = getattr(oracle, "boxes", None)
        if len(self.members) <= _EXHAUSTIVE or boxes is None or len(cands) == 0:
            self._coarse_ids = np.zeros(0, dtype=np.intp)
            self._coarse_lb = np.zeros(0)
            self._evaluate(cands)
            return
        self._fine_groups = _grid_groups(oracle, self.members, 16)
        lb = _grid_groups(oracle, self.members, 4).lower_bounds(oracle, cands)
        if getattr(oracle, "ends", None) is not None:
            proj = _Projections(oracle, self.members).lower_bounds(cands)
        else:
            proj = np.zeros(len(cands))
        lb = np.maximum(lb, proj)
        order = np.lexsort((cands, lb))
        self._coarse_ids = cands[order]
        self._coarse_lb = lb[order]
        self._proj_lb = proj[order]

    def _evaluate(self, ids):
        if not len(ids):
            return
        for start in range(0, len(ids), _EVAL_CHUNK):
            chunk = ids[start:start + _EVAL_CHUNK]
            totals = self.oracle.block(chunk, self.members).sum(axis=1)
            for c, t in zip(chunk, totals):
                heapq.heappush(self._evaluated, (float(t), int(c)))
        self.evaluations += len(ids)

    def _refine(self, ids, floor):
        lb = np.maximum(self._fine_groups.lower_bounds(self.oracle, ids), floor)
        for c, v in zip(ids, lb):
            heapq.heappush(self._fine, (float(v), int(c)))

    def _advance(self):
        while True:
            top = self._evaluated[0][0] if self._evaluated else math.inf
            if self._pos < len(self._coarse_ids) and self._coarse_lb[self._pos] <= top:
                if math.isinf(top):
                    end = self._pos + _REFINE_CHUNK
                else:
                    end = int(np.searchsorted(self._coarse_lb, top, side="right"))
                    end = min(end, self._pos + _REFINE_CHUNK)
                self._refine(self._coarse_ids[self._pos:end], self._proj_lb[self._pos:end])
                self._pos = end
                continue
            if self._fine and self._fine[0][0] <= top:
                batch = []
                while self._fine and len(batch) < _EVAL_CHUNK and self._fine[0][0] <= top:
                    batch.append(heapq.heappop(self._fine)[1])
                self._evaluate(np.array(batch, dtype=np.intp))
                continue
            break
        if not self._evaluated:
            raise IndexError("no more candidates")
        self._done.append(heapq.heappop(self._evaluated))

    def __getitem__(self, k: int) -> tuple[float, int]:
        while len(self._done) <= k:
            self._advance()
        return self._done[k]

    def __iter__(self):
        k = 0
        while True:
            try:
                yield self[k]
            except IndexError:
                return
            k += 1


def medoid_id(oracle, members: Sequence[int]) -> int:
    if not len(members):
        raise ValueError("medoid of an empty cluster")
    return CostOrder(oracle, sorted(members))[0][1]


def medoid(cluster: Sequence, distance: Callable):
    """The member of ``cluster`` with the smallest cost; ties go to the earliest member."""
    if not len(cluster):
        raise ValueError("medoid of an empty cluster")
    oracle = make_oracle(cluster, distance)
    return cluster[medoid_id(oracle, range(len(cluster)))]


@dataclass
class ClusterSet:
    clusters: list[list[int]]
    medoids: list[int]
    iterations_run: int
    converged: bool
    cost_history: list[float] = field(default_factory=list)
    # ranked candidates per final cluster, reused by post-selection
    orders: list = field(default_factory=list, repr=False, compare=False)

    @property
    def total_cost(self) -> float:
        return self.cost_history[-1] if self.cost_history else 0.0


def _assign(oracle, n: int, medoids: list[int]) -> tuple[np.ndarray, np.ndarray]:
    d = np.empty((n, len(medoids)))
    for start in range(0, n, 8192):
        rows = np.arange(start, min(n, start + 8192))
        d[start:start + len(rows)] = oracle.block(rows, medoids)
    labels = np.argmin(d, axis=1)
    # a medoid always stays in its own cluster
    labels[np.asarray(medoids)] = np.arange(len(medoids))
    return labels, d[np.arange(n), labels]


def _repair_empty(labels: np.ndarray, own: np.ndarray, medoids: list[int]) -> None:
    """Give each empty cluster the item farthest from its current medoid."""
    k = len(medoids)
    for i in range(k):
        sizes = np.bincount(labels, minlength=k)
        if sizes[i]:
            continue
        movable = sizes[labels] > 1
        movable[np.asarray(medoids)] = False
        if not movable.any():
            raise ValueError("cannot repair an empty cluster")
        j = int(np.argmax(np.where(movable, own, -np.inf)))
        labels[j] = i
        own[j] = 0.0
        medoids[i] = j


def _initial_medoids(oracle, n: int, k: int, rng: np.random.Generator, init: str) -> list[int]:
    if init == "uniform":
        return [int(i) for i in rng.choice(n, size=k, replace=False)]
    first = int(rng.integers(n))
    chosen = [first]
    nearest = oracle.block(np.arange(n), [first])[:, 0]
    while len(chosen) < k:
        score = nearest.copy()
        score[chosen] = -np.inf
        nxt = int(np.argmax(score))
        chosen.append(nxt)
        nearest = np.minimum(nearest, oracle.block(np.arange(n), [nxt])[:, 0])
    return chosen


def k_medoids(items: Sequence, k_star: int, distance: Callable, seed: int = 0, max_iter: int = 100,
              init: str = "farthest", oracle=None) -> ClusterSet:
    """Alternate nearest-medoid assignment and exact medoid recomputation.

    With ``init="uniform"`` the starting medoids are a seeded uniform
    sample without replacement.  The default ``"farthest"`` draws the first
    medoid uniformly and then takes, each time, the item farthest from the
    medoids chosen so far; this puts one seed in every group of a
    well-separated instance.
    """
    n = len(items)
    if k_star < 1:
        raise ValueError("k_star must be positive")
    if n < k_star:
        raise ValueError(f"{n} item(s) cannot form {k_star} clusters")
    if oracle is None:
        oracle = make_oracle(items, distance)
    rng = np.random.default_rng(seed)
    medoids = _initial_medoids(oracle, n, k_star, rng, init)
    history = []
    converged = False
    iterations = 0
    clusters: list[list[int]] = []
    cache: dict[tuple, CostOrder] = {}
    for iterations in range(1, max_iter + 1):
        labels, own = _assign(oracle, n, medoids)
        _repair_empty(labels, own, medoids)
        clusters = [np.flatnonzero(labels == i).tolist() for i in range(k_star)]
        # an unchanged cluster keeps its ranking from the previous sweep
        cache = {key: cache[key] if key in cache else CostOrder(oracle, key)
                 for key in map(tuple, clusters)}
        orders = [cache[tuple(c)] for c in clusters]
        best = [o[0] for o in orders]
        new = [m for _, m in best]
        history.append(float(sum(c for c, _ in best)))
        if new == medoids:
            converged = True
            break
        medoids = new
    return ClusterSet(clusters, new, iterations, converged, history, orders)
