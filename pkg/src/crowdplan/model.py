"""Domain types shared by the line and point pipelines."""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Any, Mapping, Optional, Sequence, Union

from .geometry import (
    EPSILON,
    ConvexRegion,
    Point,
    Segment,
    hausdorff_distance,
    point_distance,
    point_in_region,
    segment_in_region,
    touches_any,
)


class ConsensusError(Exception):
    """Base class for constraint-infeasibility failures."""


class InsufficientSurvivorsError(ConsensusError):
    def __init__(self, step: str, survivors: int, needed: int):
        self.step = step
        self.survivors = survivors
        self.needed = needed
        super().__init__(f"only {survivors} opinion(s) left after {step}; {needed} required")


class InfeasibleSelectionError(ConsensusError):
    def __init__(self, cluster: int, threshold: float, reason: str = "no candidate clears the congestion threshold"):
        self.cluster = cluster
        self.threshold = threshold
        super().__init__(f"cluster {cluster}: {reason} (threshold {threshold:.4f})")


class InfeasibleAllocationError(ConsensusError):
    pass


@dataclass(frozen=True)
class Annotator:
    id: str
    attributes: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.id:
            raise ValueError("annotator id must be non-empty")


@dataclass(frozen=True)
class LineOpinion:
    annotator: str
    index: int
    segment: Segment
    original: Optional[Segment] = None

    def __post_init__(self):
        if self.original is None:
            object.__setattr__(self, "original", self.segment)

    @property
    def id(self) -> str:
        return f"{self.annotator}#{self.index}"

    @property
    def adjusted(self) -> bool:
        return self.segment != self.original


@dataclass(frozen=True)
class PointOpinion:
    annotator: str
    index: int
    point: Point
    tag: str
    location_ok: bool = True

    @property
    def id(self) -> str:
        return f"{self.annotator}#{self.index}"


@dataclass(frozen=True)
class LineOpinionBatch:
    annotator: str
    opinions: tuple[LineOpinion, ...]

    @classmethod
    def from_segments(cls, annotator: str, segments: Sequence[Segment]) -> "LineOpinionBatch":
        return cls(annotator, tuple(LineOpinion(annotator, i, s) for i, s in enumerate(segments)))

    @property
    def segments(self) -> list[Segment]:
        return [o.segment for o in self.opinions]

    def keep(self, opinions) -> "LineOpinionBatch":
        return replace(self, opinions=tuple(opinions))


@dataclass(frozen=True)
class PointOpinionBatch:
    annotator: str
    opinions: tuple[PointOpinion, ...]

    @classmethod
    def from_points(cls, annotator: str, points: Sequence[tuple[Point, str]]) -> "PointOpinionBatch":
        return cls(annotator, tuple(PointOpinion(annotator, i, p, tag) for i, (p, tag) in enumerate(points)))

    def keep(self, opinions) -> "PointOpinionBatch":
        return replace(self, opinions=tuple(opinions))


Batch = Union[LineOpinionBatch, PointOpinionBatch]


@dataclass(frozen=True)
class Facility:
    """An existing point facility (e.g. an ATM).

    ``exempt`` marks facilities that are not in an open space; they do not
    count against inter-separability.
    """

    point: Point
    tag: str
    exempt: bool = False


@dataclass(frozen=True)
class BackgroundInfrastructure:
    region: ConvexRegion
    segments: tuple[Segment, ...] = ()
    facilities: tuple[Facility, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        object.__setattr__(self, "facilities", tuple(self.facilities))
        for s in self.segments:
            if not segment_in_region(s, self.region):
                raise ValueError(f"background segment {s.coords()} lies outside the region")
        for f in self.facilities:
            if not point_in_region(f.point, self.region):
                raise ValueError(f"background facility at ({f.point.x}, {f.point.y}) lies outside the region")

    def facilities_of(self, tag: str, include_exempt: bool = False) -> list[Facility]:
        return [f for f in self.facilities if f.tag == tag and (include_exempt or not f.exempt)]


RELAXATION_POLICIES = ("strict", "geometric-decay")

# JSON / CLI names that differ from the attribute names
_CONFIG_ALIASES = {"D1": "d1", "D2": "d2", "L": "max_length"}
_CONFIG_NAMES = {v: k for k, v in _CONFIG_ALIASES.items()}


@dataclass(frozen=True)
class ConstraintConfig:
    d1: float
    d2: float
    max_length: float
    k_star: int
    max_iter: int = 100
    epsilon: float = EPSILON
    seed: int = 0
    relaxation: str = "strict"
    decay_factor: float = 0.9
    max_relaxations: int = 20
    allocation_radius: float = 750.0
    eligibility_max_existing: int = 3
    closeness_tolerance: float = 0.15
    # remove lines still longer than L once intra-separability has run
    length_screen: bool = True
    # "farthest" (seeded first pick, farthest-first after) or "uniform"
    init: str = "farthest"
    # "dhondt" or "largest-remainder"
    allocation_method: str = "dhondt"
    allocation_center: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if not self.d1 > 0 or not self.d2 > 0 or not self.max_length > 0:
            raise ValueError("D1, D2 and L must be positive")
        if int(self.k_star) != self.k_star or self.k_star < 1:
            raise ValueError("k_star must be a positive integer")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.relaxation not in RELAXATION_POLICIES:
            raise ValueError(f"relaxation must be one of {RELAXATION_POLICIES}")
        if not 0 < self.decay_factor < 1:
            raise ValueError("decay_factor must lie in (0, 1)")
        if self.max_relaxations < 0:
            raise ValueError("max_relaxations must be non-negative")
        if not 0 < self.closeness_tolerance < 1:
            raise ValueError("closeness_tolerance must lie in (0, 1)")
        if self.init not in ("farthest", "uniform"):
            raise ValueError("init must be 'farthest' or 'uniform'")
        if self.allocation_method not in ("dhondt", "largest-remainder"):
            raise ValueError("allocation_method must be 'dhondt' or 'largest-remainder'")
        if self.allocation_center is not None:
            object.__setattr__(self, "allocation_center", tuple(float(v) for v in self.allocation_center))

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ConstraintConfig":
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for key, value in data.items():
            name = _CONFIG_ALIASES.get(key, key)
            if name not in known:
                raise ValueError(f"unknown constraint field {key!r}")
            kwargs[name] = value
        return cls(**kwargs)

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = list(value)
            out[_CONFIG_NAMES.get(f.name, f.name)] = value
        return out

    def with_overrides(self, **changes) -> "ConstraintConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


@dataclass
class LogEntry:
    stage: str
    opinion: str
    action: str  # "removed" or "adjusted"
    reason: str
    detail: str = ""

    def to_dict(self) -> dict:
        return {"stage": self.stage, "opinion": self.opinion, "action": self.action,
                "reason": self.reason, "detail": self.detail}


@dataclass
class ViolationReport:
    violations: dict[str, list[str]]
    total_opinions: int

    @property
    def counts(self) -> dict[str, int]:
        return {name: len(ids) for name, ids in self.violations.items()}

    @property
    def violating(self) -> set[str]:
        return {i for ids in self.violations.values() for i in ids}

    @property
    def error_rate(self) -> float:
        """Percentage of distinct violating opinions, two decimals."""
        if not self.total_opinions:
            return 0.0
        return round(100.0 * len(self.violating) / self.total_opinions, 2)

    def to_dict(self) -> dict:
        return {
            "total_opinions": self.total_opinions,
            "violations": {k: {"count": len(v), "opinions": list(v)} for k, v in self.violations.items()},
            "violating_opinions": len(self.violating),
            "error_rate": self.error_rate,
        }


@dataclass(frozen=True)
class Provenance:
    opinion: str
    annotator: str
    original: Union[Segment, Point]
    tag: Optional[str] = None


@dataclass
class Consensus:
    representatives: list
    provenance: list[Provenance]
    cluster_sizes: list[int]
    effective_threshold: float
    threshold_name: str = "D2"
    relaxations: int = 0
    log: list[LogEntry] = field(default_factory=list)
    survivors: list = field(default_factory=list)
    costs: list[float] = field(default_factory=list)
    # opinion ids of each representative's source cluster
    clusters: list[list[str]] = field(default_factory=list)
    iterations: int = 0
    converged: bool = True
    allocation: Any = None

    @property
    def effective_D2(self) -> float:
        return self.effective_threshold


def _line_violations(batches, background, config):
    region = background.region
    names = ("boundary", "intersection", "inter_separability", "intra_separability")
    found = {n: [] for n in names}
    for batch in batches:
        for o in batch.opinions:
            s = o.segment
            if not segment_in_region(s, region, config.epsilon):
                found["boundary"].append(o.id)
            if not touches_any(s, background.segments, config.epsilon):
                found["intersection"].append(o.id)
            if any(hausdorff_distance(s, b) < config.d1 for b in background.segments):
                found["inter_separability"].append(o.id)
        ops = batch.opinions
        for j in range(1, len(ops)):
            if any(hausdorff_distance(ops[i].segment, ops[j].segment) < config.d1 for i in range(j)):
                found["intra_separability"].append(ops[j].id)
    return found


def _point_violations(batches, background, config):
    region = background.region
    names = ("boundary", "intra_separability", "inter_separability")
    found = {n: [] for n in names}
    for batch in batches:
        ops = batch.opinions
        for j, o in enumerate(ops):
            if not point_in_region(o.point, region, config.epsilon):
                found["boundary"].append(o.id)
            if any(point_distance(ops[i].point, o.point) < config.d1 for i in range(j)):
                found["intra_separability"].append(o.id)
            if any(point_distance(f.point, o.point) < config.d1 for f in background.facilities_of(o.tag)):
                found["inter_separability"].append(o.id)
    return found


def validate_dataset(batches: Sequence[Batch], background: BackgroundInfrastructure,
                     config: ConstraintConfig) -> ViolationReport:
    """Count pre-processing constraint violations without touching the data.

    For a same-worker pair that is too close only the later opinion is
    listed, matching the keep-first removal the pipelines apply.
    """
    batches = list(batches)
    total = sum(len(b.opinions) for b in batches)
    if not batches or isinstance(batches[0], LineOpinionBatch):
        found = _line_violations(batches, background, config)
    else:
        found = _point_violations(batches, background, config)
    return ViolationReport(found, total)
