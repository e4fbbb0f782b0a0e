"""Generalized Kuramoto synchronization on products of Stiefel manifolds St(p, n)^N."""
from .dynamics import (
    Configuration,
    FrequencySet,
    Trajectory,
    flow_field,
    gradient,
    integrate,
    potential,
    rotating_frame,
    sync_state,
)
from .equilibria import (
    EquilibriumCertificate,
    distance_to_consensus,
    equilibrium_check,
    splay_circle,
    splay_sphere,
    splay_st23,
)
from .graph import WeightedGraph, complete_graph, cycle_graph, is_connected, neighbors
from .manifold import (
    StiefelPoint,
    TangentVector,
    chordal_distance,
    haar_sample,
    retract,
    tangent_project,
    validate,
)
from .stability import StabilityReport, classify, f_bound, integer_program, lambda_star, trace_m

__version__ = "0.1.0"
