"""Signed-digraph analysis and synthesis of degree-bounded finite dynamical systems."""

from .sdg import (
    NEGATIVE,
    POSITIVE,
    Arc,
    ComponentStructure,
    InternalInvariantError,
    PreconditionError,
    ResourceCapError,
    SdgError,
    SdgParseError,
    SignedCycle,
    SignedDigraph,
    UnsignedDigraph,
    classify_vertices,
    component_structure,
    distance,
    enumerate_cycles,
    find_disjoint_positive_cycles,
    format_sdg,
    is_signed_cycle,
    load_sdg,
    parse_sdg,
    save_sdg,
    to_dot,
    underlying_cycle_order,
)
from .fds import (
    ConvergenceWitness,
    Fds,
    IntervalProduct,
    constant_fds,
    converges_toward,
    enumerate_degree_bounded_systems,
    fds_from_dict,
    fds_to_dict,
    from_component_functions,
    load_fds,
    random_fds,
    save_fds,
)
from .synthesis import (
    ConvergencePlan,
    ExtensionState,
    NilpotencyCertificate,
    check_extension_postconditions,
    check_nilpotency_certificate,
    construct_2k_fixed_points,
    construct_converging,
    construct_nilpotent,
    construct_no_fixed_point,
    convergence_plan,
    cycle_subsystem,
    extend_all,
    extend_by_arc,
    load_certificate,
    save_certificate,
)

__all__ = [
    "Arc",
    "ComponentStructure",
    "ConvergencePlan",
    "ConvergenceWitness",
    "ExtensionState",
    "Fds",
    "IntervalProduct",
    "InternalInvariantError",
    "NEGATIVE",
    "NilpotencyCertificate",
    "POSITIVE",
    "PreconditionError",
    "ResourceCapError",
    "SdgError",
    "SdgParseError",
    "SignedCycle",
    "SignedDigraph",
    "UnsignedDigraph",
    "check_extension_postconditions",
    "check_nilpotency_certificate",
    "classify_vertices",
    "component_structure",
    "constant_fds",
    "construct_2k_fixed_points",
    "construct_converging",
    "construct_nilpotent",
    "construct_no_fixed_point",
    "convergence_plan",
    "converges_toward",
    "cycle_subsystem",
    "distance",
    "enumerate_cycles",
    "enumerate_degree_bounded_systems",
    "extend_all",
    "extend_by_arc",
    "fds_from_dict",
    "fds_to_dict",
    "find_disjoint_positive_cycles",
    "format_sdg",
    "from_component_functions",
    "is_signed_cycle",
    "load_certificate",
    "load_fds",
    "load_sdg",
    "parse_sdg",
    "random_fds",
    "save_certificate",
    "save_fds",
    "save_sdg",
    "to_dot",
    "underlying_cycle_order",
]

__version__ = "0.1.0"
