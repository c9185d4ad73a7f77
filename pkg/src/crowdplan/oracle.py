"""Slow reference implementations used to check the fast paths."""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .geometry import (
    Point,
    Segment,
    clustering_distance_d2,
    hausdorff_distance,
    point_distance,
    point_in_region,
    point_segment_distance,
    point_segment_distance_v,
    segment_in_region,
    segments_to_array,
    touches_any,
)
from .model import (
    BackgroundInfrastructure,
    ConstraintConfig,
    Consensus,
    PointOpinionBatch,
)


def _directed_sampled(s: Segment, t: Segment, n: int) -> float:
    u = np.linspace(0.0, 1.0, n)
    # (1-u)a + ub lands exactly on both endpoints
    px = (1.0 - u) * s.a.x + u * s.b.x
    py = (1.0 - u) * s.a.y + u * s.b.y
    return float(point_segment_distance_v(px, py, segments_to_array([t])[0]).max())


def sampled_hausdorff(s: Segment, t: Segment, samples_per_segment: int = 1000) -> float:
    """Hausdorff distance estimated from evenly spaced samples.

    Samples run from endpoint to endpoint on one segment and are measured
    exactly against the other, so the estimate never exceeds the true value.
    It does not assume where the supremum sits: an interior sample farther
    out than both endpoints would show up as an excess.
    """
    if samples_per_segment < 2:
        raise ValueError("need at least two samples per segment")
    return max(_directed_sampled(s, t, samples_per_segment), _directed_sampled(t, s, samples_per_segment))


def _partitions(n: int, k: int):
    """Restricted growth strings of length n using exactly k labels."""
    labels = [0] * n

    def rec(i, used):
        if n - i < k - used:
            return
        if i == n:
            if used == k:
                yield tuple(labels)
            return
        for lab in range(min(used + 1, k)):
            labels[i] = lab
            yield from rec(i + 1, max(used, lab + 1))

    if n == 0:
        return
    labels[0] = 0
    yield from rec(1, 1)


def brute_force_clustering(items: Sequence, k_star: int, distance: Callable) -> tuple[float, list[list[int]]]:
    """Optimal medoid clustering by enumerating every partition.

    Returns ``(cost, partition)`` where ``partition`` lists item ids per
    group, groups ordered by their first id.  Among optimal partitions the
    lexicographically smallest label sequence wins.
    """
    n = len(items)
    if n > 10 or k_star > 3:
        raise ValueError("brute force is limited to 10 items and k_star <= 3")
    if not 1 <= k_star <= n:
        raise ValueError("k_star must lie between 1 and the number of items")
    D = np.array([[distance(items[i], items[j]) for j in range(n)] for i in range(n)], dtype=np.float64)
    best = None
    for labels in _partitions(n, k_star):
        groups = [[i for i in range(n) if labels[i] == lab] for lab in range(k_star)]
        total = math.fsum(min(math.fsum(D[m, g]) for m in g) for g in groups)
        if best is None or total < best[0]:
            best = (total, groups)
    return best


def _line_checks(consensus: Consensus, batches, background, config, deep: bool) -> list[str]:
    out = []
    reps = consensus.representatives
    eps = config.epsilon
    bg = background.segments
    thr = consensus.effective_threshold
    ingested = {o.id: o for b in batches for o in b.opinions}
    survivors = {o.id: o for o in consensus.survivors}

    if len(reps) != config.k_star:
        out.append(f"count: {len(reps)} representatives for k*={config.k_star}")
    if not 0 < thr <= config.d2:
        out.append(f"effective_threshold: {thr} outside (0, D2={config.d2}]")
    elif config.relaxation == "strict" and thr != config.d2:
        out.append(f"effective_threshold: relaxed to {thr} under the strict policy")
    for j, s in enumerate(reps):
        tag = f"rep {j}"
        if s.length > config.max_length:
            out.append(f"length: {tag} has length {s.length:.4f} > L={config.max_length}")
        if not segment_in_region(s, background.region, eps):
            out.append(f"region: {tag} leaves the region")
        if not touches_any(s, bg, eps):
            out.append(f"intersection: {tag} does not touch the background")
        for k, b in enumerate(bg):
            h = hausdorff_distance(s, b)
            if h < config.d1:
                out.append(f"inter_separability: {tag} is {h:.4f} < D1 from background line {k}")
            if h < thr:
                out.append(f"congestion: {tag} is {h:.4f} from background line {k}")
        for i in range(j):
            h = hausdorff_distance(reps[i], s)
            if h < thr:
                out.append(f"congestion: reps {i} and {j} are {h:.4f} apart")
    for j, p in enumerate(consensus.provenance):
        src = ingested.get(p.opinion)
        if src is None:
            out.append(f"provenance: rep {j} cites unknown opinion {p.opinion}")
            continue
        if src.segment != p.original:
            out.append(f"provenance: rep {j} original differs from ingested {p.opinion}")
        if j < len(reps):
            s = reps[j]
            if any(point_segment_distance(q, s) > eps for q in (p.original.a, p.original.b)):
                out.append(f"provenance: rep {j} does not contain its original proposal")
        if j < len(consensus.clusters) and p.opinion not in consensus.clusters[j]:
            out.append(f"membership: rep {j} ({p.opinion}) is not in its source cluster")
    # intra-separability among the same worker's representatives
    for i in range(len(reps)):
        for j in range(i + 1, len(reps)):
            pi, pj = consensus.provenance[i], consensus.provenance[j]
            if pi.annotator == pj.annotator:
                h = hausdorff_distance(reps[i], reps[j])
                if h < config.d1:
                    out.append(f"intra_separability: reps {i} and {j} from {pi.annotator} are {h:.4f} apart")
    if deep:
        out.extend(_line_optimality(consensus, background, config, survivors))
    return out


def _line_optimality(consensus, background, config, survivors) -> list[str]:
    out = []
    thr = consensus.effective_threshold
    chosen = []
    for j, p in enumerate(consensus.provenance):
        if j >= len(consensus.clusters) or p.opinion not in survivors:
            break
        members = [survivors[i].segment for i in consensus.clusters[j] if i in survivors]
        me = survivors[p.opinion].segment
        mine = math.fsum(clustering_distance_d2(me, t) for t in members)
        for t in members:
            if t.length > config.max_length:
                continue
            c = math.fsum(clustering_distance_d2(t, u) for u in members)
            if c < mine - 1e-9 * max(1.0, mine):
                clear = min((hausdorff_distance(t, b) for b in (*background.segments, *chosen)), default=math.inf)
                if clear >= thr:
                    out.append(f"optimality: rep {j} has cost {mine:.4f} but a feasible member costs {c:.4f}")
                    break
        chosen.append(consensus.representatives[j])
    return out


def _point_checks(consensus: Consensus, batches, background, config, deep: bool) -> list[str]:
    out = []
    reps = consensus.representatives
    thr = consensus.effective_threshold
    ingested = {o.id: o for b in batches for o in b.opinions}
    if consensus.allocation is not None:
        want = sum(consensus.allocation.allocation.values())
        if len(reps) != want:
            out.append(f"count: {len(reps)} sites for {want} allocated")
        per = {}
        for p in consensus.provenance:
            per[p.tag] = per.get(p.tag, 0) + 1
        if per != consensus.allocation.allocation:
            out.append(f"count: sites per provider {per} differ from allocation {consensus.allocation.allocation}")
    if not 0 < thr <= config.d1:
        out.append(f"effective_threshold: {thr} outside (0, D1={config.d1}]")
    for j, (q, p) in enumerate(zip(reps, consensus.provenance)):
        if not point_in_region(q, background.region, config.epsilon):
            out.append(f"region: site {j} is outside the region")
        for f in background.facilities_of(p.tag):
            d = point_distance(q, f.point)
            if d < config.d1:
                out.append(f"inter_separability: site {j} is {d:.4f} < D1 from an existing {p.tag} facility")
        for i in range(j):
            d = point_distance(reps[i], q)
            if d < thr:
                out.append(f"congestion: sites {i} and {j} are {d:.4f} apart")
        src = ingested.get(p.opinion)
        if src is None:
            out.append(f"provenance: site {j} cites unknown opinion {p.opinion}")
        elif src.point != q or src.tag != p.tag:
            out.append(f"provenance: site {j} differs from ingested {p.opinion}")
        if j < len(consensus.clusters) and p.opinion not in consensus.clusters[j]:
            out.append(f"membership: site {j} ({p.opinion}) is not in its source cluster")
    return out


def verify_consensus(consensus: Consensus, batches: Sequence, background: BackgroundInfrastructure,
                     config: ConstraintConfig, deep: bool = True) -> list[str]:
    """Re-check a consensus from first principles.

    Returns one ``"<assertion>: <detail>"`` string per failure; an empty
    list means every assertion holds.  ``deep`` also confirms each line
    representative is the cheapest feasible member of its cluster, which is
    quadratic in the cluster size.
    """
    batches = list(batches)
    if consensus.representatives and isinstance(consensus.representatives[0], Point):
        return _point_checks(consensus, batches, background, config, deep)
    if batches and isinstance(batches[0], PointOpinionBatch):
        return _point_checks(consensus, batches, background, config, deep)
    return _line_checks(consensus, batches, background, config, deep)
