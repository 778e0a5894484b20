"""Monotonicity-testing lab over hypercubes and hypergrids."""

__version__ = "0.1.0"

from .errors import CapacityError, ContractViolation, DomainError
from .hypergrid import BitPoint, DomainParams, Hypercube, Hypergrid, cube_leq, grid_leq, phi, phi_inverse, val
from .family import FamilyParams, HardFunction, block_index, evaluate, lift_to_hypergrid, sample, support
from .distance import FunctionTable, distance_to_monotone, min_vertex_cover, repair, violations, witness_matching
from .capture import QuerySet, analyze, capture_coordinate, captured_set, indistinguishable_exact, query_lower_bound
from .testers import (
    FunctionOracle,
    Leaf,
    Node,
    Verdict,
    derive_non_adaptive,
    exact_error,
    monte_carlo_error,
    pair_tester,
    run_tree,
)
