"""Consensus of line-segment opinions (sewage-line planning).

The pipeline runs in a fixed order::

    boundary -> intersection -> inter-separability -> intra-separability
             -> length screen -> k-medoids under d2 -> constrained selection

Every stage takes and returns a list of :class:`LineOpinionBatch` and
appends what it removed or adjusted to an optional log list.
"""
from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import geometry
from .clustering import ClusterSet, CostOrder, SegmentD2Oracle, k_medoids
from .geometry import (
    EPSILON,
    ConvexRegion,
    Segment,
    extend_to_nearest,
    hausdorff_distance,
    segment_in_region,
    touches_any,
)
from .model import (
    BackgroundInfrastructure,
    ConstraintConfig,
    Consensus,
    InfeasibleSelectionError,
    InsufficientSurvivorsError,
    LineOpinion,
    LineOpinionBatch,
    LogEntry,
    Provenance,
)


def _emit(log, stage, opinion, action, reason, detail=""):
    if log is not None:
        log.append(LogEntry(stage, opinion.id, action, reason, detail))


def _count(batches) -> int:
    return sum(len(b.opinions) for b in batches)


def _flat(batches):
    ops = [o for b in batches for o in b.opinions]
    return ops, geometry.segments_to_array([o.segment for o in ops])


def _regroup(batches, keep):
    """Rebuild batches from a per-opinion list of replacements (None drops)."""
    out, k = [], 0
    for b in batches:
        n = len(b.opinions)
        part = keep[k:k + n]
        if all(new is old for new, old in zip(part, b.opinions)):
            out.append(b)
        else:
            out.append(b.keep([o for o in part if o is not None]))
        k += n
    return out


def constraint_boundary(batches: Sequence[LineOpinionBatch], region: ConvexRegion,
                        epsilon: float = EPSILON, log: Optional[list] = None) -> list[LineOpinionBatch]:
    ops, S = _flat(batches)
    ok = (geometry.points_in_region_v(S[:, 0], S[:, 1], region, epsilon)
          & geometry.points_in_region_v(S[:, 2], S[:, 3], region, epsilon))
    for o, good in zip(ops, ok):
        if not good:
            _emit(log, "boundary", o, "removed", "boundary", "endpoint outside the region")
    return _regroup(batches, [o if good else None for o, good in zip(ops, ok)])


def adjust_to_background(segment: Segment, background: Sequence[Segment], region: ConvexRegion,
                         epsilon: float = EPSILON) -> Optional[Segment]:
    """The shorter in-region extension of ``segment`` that reaches the background.

    Returns ``segment`` itself when an endpoint already touches, and None
    when neither extension works.
    """
    if touches_any(segment, background, epsilon):
        return segment
    options = []
    for end in (0, 1):
        ext = extend_to_nearest(segment, end, background)
        if ext is not None and segment_in_region(ext, region, epsilon):
            options.append(ext)
    if not options:
        return None
    if len(options) == 2:
        first, second = options
        # on equal length the second extension wins
        return first if first.length < second.length else second
    return options[0]


def constraint_intersection(batches: Sequence[LineOpinionBatch], background: Sequence[Segment],
                            region: ConvexRegion, epsilon: float = EPSILON,
                            log: Optional[list] = None) -> list[LineOpinionBatch]:
    ops, S = _flat(batches)
    touching = geometry.touches_any_v(S, background, epsilon)
    keep = []
    for o, ok in zip(ops, touching):
        if ok:
            keep.append(o)
            continue
        new = adjust_to_background(o.segment, background, region, epsilon)
        if new is None:
            _emit(log, "intersection", o, "removed", "intersection",
                  "no extension reaches a background line inside the region")
            keep.append(None)
        else:
            _emit(log, "intersection", o, "adjusted", "intersection",
                  f"extended to {_fmt_seg(new)} (length {new.length:.4f})")
            keep.append(LineOpinion(o.annotator, o.index, new, o.original))
    return _regroup(batches, keep)


def constraint_inter_separability(batches: Sequence[LineOpinionBatch], background: Sequence[Segment],
                                  d1: float, log: Optional[list] = None) -> list[LineOpinionBatch]:
    ops, S = _flat(batches)
    first = np.full(len(ops), -1)
    first_h = np.zeros(len(ops))
    for k, b in enumerate(background):
        h = geometry.hausdorff_one_to_many(b, S)
        new = (h < d1) & (first < 0)
        first[new] = k
        first_h[new] = h[new]
    keep = []
    for o, k, h in zip(ops, first, first_h):
        if k >= 0:
            _emit(log, "inter_separability", o, "removed", "inter_separability",
                  f"Hausdorff {h:.4f} < D1 to background line {k}")
            keep.append(None)
        else:
            keep.append(o)
    return _regroup(batches, keep)


class _Congestion:
    """Counts live proposals within Hausdorff distance D2 of a segment."""

    def __init__(self, opinions: list[LineOpinion], d2: float):
        self.d2 = d2
        self.index = {o.id: i for i, o in enumerate(opinions)}
        self.coords = geometry.segments_to_array([o.segment for o in opinions])
        self.alive = np.ones(len(opinions), dtype=bool)
        mids = 0.5 * (self.coords[:, 0:2] + self.coords[:, 2:4]) if len(opinions) else np.zeros((0, 2))
        self.tree = cKDTree(mids) if len(opinions) else None

    def remove(self, o: LineOpinion):
        self.alive[self.index[o.id]] = False

    def count(self, o: LineOpinion, exclude: Sequence[LineOpinion]) -> int:
        s = o.segment
        mid = ((s.a.x + s.b.x) / 2, (s.a.y + s.b.y) / 2)
        # a segment within Hausdorff d2 has its midpoint within d2 of s
        radius = self.d2 + s.length / 2
        near = np.asarray(self.tree.query_ball_point(mid, radius * (1 + 1e-9) + 1e-12), dtype=np.intp)
        mask = self.alive[near]
        for e in exclude:
            mask &= near != self.index[e.id]
        near = near[mask]
        if not len(near):
            return 0
        return int(np.count_nonzero(geometry.hausdorff_one_to_many(s, self.coords[near]) < self.d2))


def constraint_intra_separability(batches: Sequence[LineOpinionBatch], d1: float, d2: float,
                                  max_length: float, log: Optional[list] = None) -> list[LineOpinionBatch]:
    """Drop one line of every same-worker pair closer than D1 (Hausdorff).

    Which one goes, in order of precedence: the only one longer than
    ``max_length``; the one with more live proposals (any worker, the pair
    itself excluded) within D2; otherwise the later one.
    """
    everyone = [o for b in batches for o in b.opinions]
    congestion = _Congestion(everyone, d2)
    out = []
    for batch in batches:
        ops = list(batch.opinions)
        changed = True
        while changed:
            changed = False
            for i in range(len(ops)):
                for j in range(i + 1, len(ops)):
                    l1, l2 = ops[i], ops[j]
                    h = hausdorff_distance(l1.segment, l2.segment)
                    if h >= d1:
                        continue
                    len1, len2 = l1.segment.length, l2.segment.length
                    if len2 <= max_length < len1:
                        drop, why = l1, f"longer than L ({len1:.4f})"
                    elif len1 <= max_length < len2:
                        drop, why = l2, f"longer than L ({len2:.4f})"
                    else:
                        n1 = congestion.count(l1, (l1, l2))
                        n2 = congestion.count(l2, (l1, l2))
                        if n1 > n2:
                            drop, why = l1, f"more congested ({n1} vs {n2} within D2)"
                        elif n2 > n1:
                            drop, why = l2, f"more congested ({n2} vs {n1} within D2)"
                        else:
                            drop, why = l2, f"equal congestion ({n1}); first opinion kept"
                    keep = l2 if drop is l1 else l1
                    _emit(log, "intra_separability", drop, "removed", "intra_separability",
                          f"Hausdorff {h:.4f} < D1 to {keep.id}; {why}")
                    congestion.remove(drop)
                    ops.remove(drop)
                    changed = True
                    break
                if changed:
                    break
        out.append(batch.keep(ops))
    return out


def constraint_length(batches: Sequence[LineOpinionBatch], max_length: float,
                      log: Optional[list] = None) -> list[LineOpinionBatch]:
    ops, S = _flat(batches)
    lengths = np.sqrt(geometry._sq_v(S[:, 0], S[:, 1], S[:, 2], S[:, 3]))
    keep = []
    for o, length in zip(ops, lengths):
        if length > max_length:
            _emit(log, "length", o, "removed", "length", f"length {length:.4f} > L")
            keep.append(None)
        else:
            keep.append(o)
    return _regroup(batches, keep)


def preprocess(batches: Sequence[LineOpinionBatch], background: BackgroundInfrastructure,
               config: ConstraintConfig, log: Optional[list] = None,
               require: int = 0) -> list[LineOpinionBatch]:
    """Run the filtering/adjustment stages in order.

    Raises InsufficientSurvivorsError naming the first stage after which
    fewer than ``require`` opinions remain.
    """
    bg = background.segments
    stages = [
        ("boundary", lambda b: constraint_boundary(b, background.region, config.epsilon, log)),
        ("intersection", lambda b: constraint_intersection(b, bg, background.region, config.epsilon, log)),
        ("inter_separability", lambda b: constraint_inter_separability(b, bg, config.d1, log)),
        ("intra_separability", lambda b: constraint_intra_separability(b, config.d1, config.d2,
                                                                       config.max_length, log)),
    ]
    if config.length_screen:
        stages.append(("length", lambda b: constraint_length(b, config.max_length, log)))
    current = list(batches)
    for name, stage in stages:
        current = stage(current)
        left = _count(current)
        if left < require:
            raise InsufficientSurvivorsError(name, left, require)
    return current


def _selection_order(clusters: ClusterSet, oracle) -> list[int]:
    medoid_cost = [float(oracle.block([m], c).sum()) for m, c in zip(clusters.medoids, clusters.clusters)]
    return sorted(range(len(clusters.clusters)),
                  key=lambda i: (-len(clusters.clusters[i]), medoid_cost[i], i))


def post_processing_optimisation(items: Sequence, clusters: ClusterSet, background: Sequence[Segment],
                                 d2: float, max_length: float, relaxation: str = "strict",
                                 decay_factor: float = 0.9, max_relaxations: int = 20,
                                 oracle=None) -> Consensus:
    """Pick one representative per cluster that respects length and congestion.

    Clusters go largest first.  Within a cluster, members no longer than
    ``max_length`` are tried in ascending cost; the first whose Hausdorff
    distance to every background line and every earlier pick is at least
    the threshold is taken.  Under ``geometric-decay`` a blocked pass
    shrinks the threshold by ``decay_factor`` and restarts all picks.
    """
    opinions = [o if isinstance(o, LineOpinion) else LineOpinion("", i, o) for i, o in enumerate(items)]
    segments = [o.segment for o in opinions]
    if oracle is None:
        oracle = SegmentD2Oracle(segments)
    order = _selection_order(clusters, oracle)
    ranked = {}
    for i in order:
        members = clusters.clusters[i]
        if all(segments[m].length > max_length for m in members):
            raise InfeasibleSelectionError(i, d2, "every member is longer than L")
        reuse = clusters.orders[i] if i < len(clusters.orders) else None
        ranked[i] = reuse if reuse is not None and reuse.oracle is oracle else CostOrder(oracle, members)

    threshold = d2
    relaxations = 0
    while True:
        picks: list[tuple[int, int, float]] = []
        blocked = None
        for i in order:
            taken = [segments[p[1]] for p in picks]
            for c, m in ranked[i]:
                s = segments[m]
                if s.length > max_length:
                    continue
                clearance = min((hausdorff_distance(s, t) for t in (*background, *taken)), default=math.inf)
                if clearance >= threshold:
                    picks.append((i, m, c))
                    break
            else:
                blocked = i
                break
        if blocked is None:
            break
        if relaxation == "strict" or relaxations >= max_relaxations:
            raise InfeasibleSelectionError(blocked, threshold)
        threshold *= decay_factor
        relaxations += 1

    return Consensus(
        representatives=[segments[m] for _, m, _ in picks],
        provenance=[Provenance(opinions[m].id, opinions[m].annotator, opinions[m].original) for _, m, _ in picks],
        cluster_sizes=[len(clusters.clusters[i]) for i, _, _ in picks],
        effective_threshold=threshold,
        threshold_name="D2",
        relaxations=relaxations,
        costs=[c for _, _, c in picks],
        clusters=[[opinions[j].id for j in clusters.clusters[i]] for i, _, _ in picks],
    )


def aggregate_lines(batches: Sequence[LineOpinionBatch], background: BackgroundInfrastructure,
                    config: ConstraintConfig) -> Consensus:
    log: list[LogEntry] = []
    survivors = preprocess(batches, background, config, log, require=config.k_star)
    opinions = [o for b in survivors for o in b.opinions]
    oracle = SegmentD2Oracle([o.segment for o in opinions])
    clusters = k_medoids([o.segment for o in opinions], config.k_star, geometry.clustering_distance_d2,
                         seed=config.seed, max_iter=config.max_iter, init=config.init, oracle=oracle)
    result = post_processing_optimisation(opinions, clusters, background.segments, config.d2,
                                          config.max_length, config.relaxation, config.decay_factor,
                                          config.max_relaxations, oracle=oracle)
    result.log = log
    result.survivors = opinions
    result.iterations = clusters.iterations_run
    result.converged = clusters.converged
    return result


def _fmt_seg(s: Segment) -> str:
    return f"(({s.a.x:.4f}, {s.a.y:.4f}), ({s.b.x:.4f}, {s.b.y:.4f}))"
