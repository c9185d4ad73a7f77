"""Consensus of point opinions with provider allocation (ATM planning)."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .clustering import ClusterSet, CostOrder, EuclideanOracle, k_medoids
from .geometry import Point, point_distance, point_in_region
from .model import (
    BackgroundInfrastructure,
    ConstraintConfig,
    Consensus,
    InfeasibleAllocationError,
    InfeasibleSelectionError,
    InsufficientSurvivorsError,
    LogEntry,
    PointOpinionBatch,
    Provenance,
    ViolationReport,
    validate_dataset,
)


def _emit(log, stage, opinion, action, reason, detail=""):
    if log is not None:
        log.append(LogEntry(stage, opinion.id, action, reason, detail))


def drop_unlocated(batches: Sequence[PointOpinionBatch], log: Optional[list] = None) -> list[PointOpinionBatch]:
    """Reject opinions whose location attribute is false."""
    out = []
    for batch in batches:
        kept = []
        for o in batch.opinions:
            if o.location_ok:
                kept.append(o)
            else:
                warnings.warn(f"opinion {o.id} has no usable location; ignored", stacklevel=2)
                _emit(log, "ingest", o, "removed", "location", "location attribute is false")
        out.append(batch.keep(kept))
    return out


def filter_points(batches: Sequence[PointOpinionBatch], background: BackgroundInfrastructure,
                  config: ConstraintConfig, log: Optional[list] = None) -> list[PointOpinionBatch]:
    """Boundary, then intra-separability (keep first), then inter-separability."""
    out = []
    for batch in batches:
        kept = []
        for o in batch.opinions:
            if not point_in_region(o.point, background.region, config.epsilon):
                _emit(log, "boundary", o, "removed", "boundary", "outside the region")
                continue
            near = next((k for k in kept if point_distance(k.point, o.point) < config.d1), None)
            if near is not None:
                _emit(log, "intra_separability", o, "removed", "intra_separability",
                      f"{point_distance(near.point, o.point):.4f} < D1 from {near.id}")
                continue
            kept.append(o)
        out.append(batch.keep(kept))
    final = []
    for batch in out:
        kept = []
        for o in batch.opinions:
            clash = next((f for f in background.facilities_of(o.tag)
                          if point_distance(f.point, o.point) < config.d1), None)
            if clash is None:
                kept.append(o)
            else:
                _emit(log, "inter_separability", o, "removed", "inter_separability",
                      f"{point_distance(clash.point, o.point):.4f} < D1 from an existing {o.tag} facility")
        final.append(batch.keep(kept))
    return final


def existing_counts(background: BackgroundInfrastructure, center: Optional[Point] = None,
                    radius: float = 750.0) -> dict[str, int]:
    """Existing facilities per tag within ``radius`` of ``center``.

    The centre defaults to the region centroid; exempt facilities count too.
    """
    c = center if center is not None else background.region.centroid()
    counts: dict[str, int] = {}
    for f in background.facilities:
        if point_distance(f.point, c) <= radius:
            counts[f.tag] = counts.get(f.tag, 0) + 1
    return counts


@dataclass
class AllocationResult:
    allocation: dict[str, int]
    rationale: list[str] = field(default_factory=list)
    swaps: list[tuple[str, str]] = field(default_factory=list)
    base: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"allocation": dict(self.allocation), "base": dict(self.base),
                "swaps": [list(s) for s in self.swaps], "rationale": list(self.rationale)}


def _dhondt(counts: Mapping[str, int], total: int, notes: list[str]) -> dict[str, int]:
    names = list(counts)
    alloc = {n: 0 for n in names}
    for slot in range(total):
        best = None
        for pos, n in enumerate(names):
            if alloc[n] >= counts[n]:
                continue
            key = (counts[n] / (alloc[n] + 1), counts[n], -pos)
            if best is None or key > best[0]:
                best = (key, n)
        alloc[best[1]] += 1
        notes.append(f"slot {slot + 1} -> {best[1]} (quotient {best[0][0]:.4f})")
    return alloc


def _largest_remainder(counts: Mapping[str, int], total: int, notes: list[str]) -> dict[str, int]:
    names = list(counts)
    whole = sum(counts.values())
    quota = {n: total * counts[n] / whole for n in names}
    alloc = {n: min(int(math.floor(quota[n])), counts[n]) for n in names}
    for n in names:
        notes.append(f"{n}: quota {quota[n]:.4f}, floor {alloc[n]}")
    rest = total - sum(alloc.values())
    order = sorted(range(len(names)), key=lambda p: (-(quota[names[p]] - alloc[names[p]]), -counts[names[p]], p))
    for p in order:
        if rest == 0:
            break
        n = names[p]
        if alloc[n] < counts[n]:
            alloc[n] += 1
            rest -= 1
            notes.append(f"remainder slot -> {n}")
    return alloc


def preferential_allocation(proposal_counts: Mapping[str, int], existing: Mapping[str, int], total: int,
                            method: str = "dhondt", closeness: float = 0.15,
                            max_existing: int = 3) -> AllocationResult:
    """Share ``total`` facilities between providers, then favour the under-served.

    The base split is proportional to proposal counts (D'Hondt by default,
    capped at each provider's count).  Afterwards, a provider with no slot
    and fewer than ``max_existing`` existing facilities takes one slot from
    a provider with at least ``max_existing`` existing facilities whose
    count is within ``closeness`` of its own (relative to the larger).
    """
    counts = {k: int(v) for k, v in proposal_counts.items() if int(v) > 0}
    if total < 1:
        raise ValueError("total facilities must be at least 1")
    if not counts:
        raise InfeasibleAllocationError("no surviving proposals to allocate from")
    if total > sum(counts.values()):
        raise InfeasibleAllocationError(
            f"{total} facilities requested but only {sum(counts.values())} proposals survive")
    notes: list[str] = []
    if method == "dhondt":
        alloc = _dhondt(counts, total, notes)
    elif method == "largest-remainder":
        alloc = _largest_remainder(counts, total, notes)
    else:
        raise ValueError(f"unknown allocation method {method!r}")
    base = dict(alloc)
    swaps = []
    pos = {n: i for i, n in enumerate(counts)}
    for taker in sorted(counts, key=lambda n: (-counts[n], pos[n])):
        if alloc[taker] or existing.get(taker, 0) >= max_existing:
            continue
        donors = []
        for d in counts:
            if d == taker or alloc[d] < 1 or existing.get(d, 0) < max_existing:
                continue
            gap = abs(counts[d] - counts[taker]) / max(counts[d], counts[taker])
            if gap <= closeness:
                donors.append((gap, -counts[d], pos[d], d))
        if not donors:
            continue
        gap, _, _, donor = min(donors)
        alloc[donor] -= 1
        alloc[taker] += 1
        swaps.append((donor, taker))
        notes.append(f"swap: {donor} ({counts[donor]} proposals, {existing.get(donor, 0)} existing) gives a slot "
                     f"to {taker} ({counts[taker]} proposals, {existing.get(taker, 0)} existing); "
                     f"relative gap {gap:.4f}")
    return AllocationResult({n: alloc[n] for n in counts if alloc[n]}, notes, swaps,
                            {n: base[n] for n in counts if base[n]})


def aggregate_points(batches: Sequence[PointOpinionBatch], background: BackgroundInfrastructure,
                     config: ConstraintConfig, total: int) -> Consensus:
    """Filter, allocate per provider, cluster each provider's points and pick sites.

    Sites are picked greedily in ascending cluster cost; a candidate must be
    at least the threshold (D1, possibly relaxed) from every non-exempt
    same-tag facility and every site already picked.
    """
    log: list[LogEntry] = []
    survivors = filter_points(drop_unlocated(batches, log), background, config, log)
    opinions = [o for b in survivors for o in b.opinions]
    if len(opinions) < total:
        raise InsufficientSurvivorsError("filtering", len(opinions), total)
    counts: dict[str, int] = {}
    for o in opinions:
        counts[o.tag] = counts.get(o.tag, 0) + 1
    center = Point(*config.allocation_center) if config.allocation_center is not None else None
    allocation = preferential_allocation(counts, existing_counts(background, center, config.allocation_radius),
                                         total, config.allocation_method, config.closeness_tolerance,
                                         config.eligibility_max_existing)

    providers = sorted(allocation.allocation, key=lambda t: (-allocation.allocation[t], -counts[t], t))
    plan = []  # (tag, members as global indices, CostOrder)
    oracle = EuclideanOracle([o.point for o in opinions])
    iterations, converged = 0, True
    for tag in providers:
        idx = [i for i, o in enumerate(opinions) if o.tag == tag]
        k = allocation.allocation[tag]
        sub = EuclideanOracle([opinions[i].point for i in idx])
        cs: ClusterSet = k_medoids([opinions[i].point for i in idx], k, point_distance, seed=config.seed,
                                   max_iter=config.max_iter, init=config.init, oracle=sub)
        iterations = max(iterations, cs.iterations_run)
        converged = converged and cs.converged
        medoid_cost = [float(sub.block([m], c).sum()) for m, c in zip(cs.medoids, cs.clusters)]
        for c in sorted(range(k), key=lambda c: (-len(cs.clusters[c]), medoid_cost[c], c)):
            members = [idx[j] for j in cs.clusters[c]]
            plan.append((tag, members, CostOrder(oracle, members)))

    threshold = config.d1
    relaxations = 0
    while True:
        picks = []
        blocked = None
        for n, (tag, members, ranked) in enumerate(plan):
            fixed = [f.point for f in background.facilities_of(tag)]
            taken = [opinions[p[1]].point for p in picks]
            for c, m in ranked:
                p = opinions[m].point
                clearance = min((point_distance(p, q) for q in (*fixed, *taken)), default=math.inf)
                if clearance >= threshold:
                    picks.append((n, m, c))
                    break
            else:
                blocked = n
                break
        if blocked is None:
            break
        if config.relaxation == "strict" or relaxations >= config.max_relaxations:
            raise InfeasibleSelectionError(blocked, threshold)
        threshold *= config.decay_factor
        relaxations += 1

    return Consensus(
        representatives=[opinions[m].point for _, m, _ in picks],
        provenance=[Provenance(opinions[m].id, opinions[m].annotator, opinions[m].point, opinions[m].tag)
                    for _, m, _ in picks],
        cluster_sizes=[len(plan[n][1]) for n, _, _ in picks],
        effective_threshold=threshold,
        threshold_name="D1",
        relaxations=relaxations,
        log=log,
        survivors=opinions,
        costs=[c for _, _, c in picks],
        clusters=[[opinions[j].id for j in plan[n][1]] for n, _, _ in picks],
        iterations=iterations,
        converged=converged,
        allocation=allocation,
    )


def validate_points(batches: Sequence[PointOpinionBatch], background: BackgroundInfrastructure,
                    region=None, config: Optional[ConstraintConfig] = None) -> ViolationReport:
    """Violation counts for point opinions; ``region`` overrides the background's."""
    if config is None:
        raise ValueError("a ConstraintConfig is required")
    if region is not None and region != background.region:
        background = BackgroundInfrastructure(region, background.segments, background.facilities)
    return validate_dataset(batches, background, config)
