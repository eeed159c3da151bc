"""Combinatorial cell complexes of graph-manifold universal covers.

Core layers: words/surface (column trees and wall lines inside one
chamber), cover (the chamber tree with affine wall charts), metric
(weighted cell distances, balls, deck maps), lemmas (finite-window
checkers with replayable witnesses) and torusbundle (SL(2,Z) semidirect
arithmetic for fibered covering counts).
"""

from .cover import ROOT, CellAddress, CoverComplex, Gluing, GluingMap, ManifoldSpec
from .documents import SpecDocument, document_for, parse_spec_document
from .lemmas import (
    LemmaReport,
    WallConstants,
    estimate_wall_constants,
    replay_witness,
    run_suite,
    sample_pairs,
)
from .errors import (
    BudgetExceeded,
    ChamberComplexError,
    DeckIncompatible,
    InvariantViolation,
    SpecSyntaxError,
    TheoremContradiction,
)
from .metric import (
    CellSet,
    DistanceResult,
    Geodesic,
    MetricParams,
    PathLength,
    Window,
    all_geodesics,
    apply_fiber_deck,
    ball,
    canonical_upper_bound,
    displacement_growth,
    dist_prime,
    distance,
    root_cell,
    validate_deck,
)
from .surface import BoundaryCircle, ChamberPattern, WallLine, make_pattern
from .torusbundle import (
    GroupElement,
    LoopDecomposition,
    MonodromyMatrix,
    geometric_series_order_bruteforce,
    geometric_series_order_constructive,
    loop_decomposition,
    minimal_entry_degree,
    multiply,
    power,
)

__all__ = [
    "BoundaryCircle",
    "BudgetExceeded",
    "CellAddress",
    "CellSet",
    "ChamberComplexError",
    "ChamberPattern",
    "CoverComplex",
    "DeckIncompatible",
    "DistanceResult",
    "Geodesic",
    "Gluing",
    "GluingMap",
    "GroupElement",
    "InvariantViolation",
    "LemmaReport",
    "LoopDecomposition",
    "ManifoldSpec",
    "MetricParams",
    "MonodromyMatrix",
    "PathLength",
    "ROOT",
    "SpecDocument",
    "SpecSyntaxError",
    "TheoremContradiction",
    "WallConstants",
    "WallLine",
    "Window",
    "all_geodesics",
    "apply_fiber_deck",
    "ball",
    "canonical_upper_bound",
    "displacement_growth",
    "dist_prime",
    "distance",
    "document_for",
    "estimate_wall_constants",
    "geometric_series_order_bruteforce",
    "geometric_series_order_constructive",
    "loop_decomposition",
    "make_pattern",
    "minimal_entry_degree",
    "multiply",
    "parse_spec_document",
    "power",
    "replay_witness",
    "root_cell",
    "run_suite",
    "sample_pairs",
    "validate_deck",
]
