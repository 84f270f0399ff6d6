"""Exact K-theory of the finite cores of branched self-similar maps."""

from .dimension import (
    K0Presentation,
    beta_matrix,
    inclusion_matrix,
    k0_finite,
    limit_report,
    realize_class,
    trace_pairing,
)
from .exact import Lattice, RationalMatrix, hnf, kernel_basis, rank, snf, solve_in_lattice
from .fiber import Block, Fiber, FiberDecomposition, build_fiber, decompose_projection, minimal_projection
from .mapspec import (
    MapSpec,
    PQOrbit,
    backward_count,
    builtin,
    h_iterate,
    level_branch_counts,
    load_spec,
    parse_spec_text,
    pq_orbits,
    singular_points,
    validate,
)
from .reference import k1_metadata

__all__ = [
    "Block", "Fiber", "FiberDecomposition", "K0Presentation", "Lattice", "MapSpec", "PQOrbit",
    "RationalMatrix", "backward_count", "beta_matrix", "build_fiber", "builtin",
    "decompose_projection", "h_iterate", "hnf", "inclusion_matrix", "k0_finite", "k1_metadata",
    "kernel_basis", "level_branch_counts", "limit_report", "load_spec", "minimal_projection",
    "parse_spec_text", "pq_orbits", "rank", "realize_class", "singular_points", "snf",
    "solve_in_lattice", "trace_pairing", "validate",
]
