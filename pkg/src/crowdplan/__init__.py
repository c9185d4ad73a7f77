"""Constraint-aware consensus of crowd-proposed facility sites.

Opinions are 2-D points (e.g. ATM sites, grouped by provider) or line
segments (e.g. new sewage lines that must join an existing canal
network).  Each pipeline filters or adjusts opinions against hard
constraints, clusters the survivors with seeded k-medoids and picks one
real opinion per cluster that keeps the required spacing.
"""
from .clustering import ClusterSet, cost, k_medoids, medoid
from .geometry import (
    ConvexRegion,
    Point,
    Segment,
    clustering_distance_d2,
    extend_to_nearest,
    hausdorff_distance,
    point_distance,
    point_in_region,
    point_segment_distance,
    segment_in_region,
    segments_intersect,
)
from .lines import (
    aggregate_lines,
    constraint_boundary,
    constraint_inter_separability,
    constraint_intersection,
    constraint_intra_separability,
    post_processing_optimisation,
)
from .model import (
    Annotator,
    BackgroundInfrastructure,
    ConsensusError,
    Consensus,
    ConstraintConfig,
    Facility,
    InfeasibleAllocationError,
    InfeasibleSelectionError,
    InsufficientSurvivorsError,
    LineOpinion,
    LineOpinionBatch,
    PointOpinion,
    PointOpinionBatch,
    ViolationReport,
    validate_dataset,
)
from .points import AllocationResult, aggregate_points, preferential_allocation, validate_points

__all__ = [
    "AllocationResult",
    "Annotator",
    "BackgroundInfrastructure",
    "ClusterSet",
    "Consensus",
    "ConsensusError",
    "ConstraintConfig",
    "ConvexRegion",
    "Facility",
    "InfeasibleAllocationError",
    "InfeasibleSelectionError",
    "InsufficientSurvivorsError",
    "LineOpinion",
    "LineOpinionBatch",
    "Point",
    "PointOpinion",
    "PointOpinionBatch",
    "Segment",
    "ViolationReport",
    "aggregate_lines",
    "aggregate_points",
    "clustering_distance_d2",
    "constraint_boundary",
    "constraint_inter_separability",
    "constraint_intersection",
    "constraint_intra_separability",
    "cost",
    "extend_to_nearest",
    "hausdorff_distance",
    "k_medoids",
    "medoid",
    "point_distance",
    "point_in_region",
    "point_segment_distance",
    "post_processing_optimisation",
    "preferential_allocation",
    "segment_in_region",
    "segments_intersect",
    "validate_dataset",
    "validate_points",
]

__version__ = "0.1.0"
