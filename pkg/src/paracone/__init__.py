"""Numerical verification toolkit for strongly cone-paraconvex mappings."""

__version__ = "0.1.0"

from .corpus import MappingSpec, corpus_get, corpus_names, load_mapping, polynomial_mapping
from .modulus import Modulus, make_power_modulus, parse_modulus, validate
from .ordered_space import (
    ConeDescriptor,
    DualVector,
    dual_cone,
    estimate_normality_constant,
    is_pointed,
    leq,
    load_cone,
    make_cone,
    member,
    orthant,
    well_based_witness,
)
from .paraconvexity import (
    SamplingPlan,
    check_cone_convex,
    check_paraconvex,
    check_scalarization,
    estimate_min_C,
    search_violation,
    verify_square_shift,
)
from .quotients import (
    build_trace,
    check_alpha_monotone,
    check_lemma_trace,
    check_lower_bound,
    estimate_directional_derivative,
)
from .reports import CheckReport, SampleTriple
