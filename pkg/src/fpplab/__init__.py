"""Simulation laboratory for first-passage percolation on finite boxes of Z^d.

The package computes geodesic times and directed geodesic times in sampled
edge-weight environments, applies uniform weight shifts, counts local detour
patterns along geodesics, and runs the Monte Carlo experiments that compare
the two growth constants and measure tail frequencies of short geodesics.
"""

__version__ = "0.1.0"

from .lattice import BoxLattice, LatticePath, floor_map, l1_norm, slab_crossings, validate_path
from .environment import (
    CriticalConstants,
    DistributionSpec,
    Environment,
    check_useful,
    path_time,
    sample_environment,
    shift_environment,
)
from .geodesic import GeodesicResult, enumerate_min_hop_geodesics, geodesic_time, reachability
from .directed import (
    DirectedResult,
    directed_argmin_invariance_check,
    directed_time,
    directed_time_brute_force,
)
from .pattern import (
    Pattern,
    count_occurrences,
    default_pattern,
    detour_uniquely_optimal,
    edge_count_bound_holds,
    in_band_event,
    max_safe_delta,
)
from .experiment import (
    ChainReport,
    ExperimentSummary,
    TrialOutcome,
    estimate_time_constants,
    run_gap_experiment,
    run_tail_experiment,
    verify_inequality_chain,
)
