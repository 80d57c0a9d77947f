"""Numerical checks that exact qubit flipping off a great circle would allow
signalling and entanglement growth under local operations."""

__version__ = "0.1.0"

from .bloch import (
    BlochVector,
    CanonicalForm,
    DegenerateTripleError,
    QubitTriple,
    bloch_vector,
    canonicalize_triple,
    coplanarity_det,
    great_circle_flipper,
    is_great_circle,
)
from .constructions import (
    AppendixReport,
    FeasibilityVerdict,
    alice_marginal_final,
    alice_marginal_initial,
    appendix_terms,
    build_entanglement_state,
    build_product_state,
    build_signalling_state,
    entanglement_gain,
    lambda_pair,
    nosignalling_feasibility,
    product_final,
    signalling_deviation,
)
from .linalg import (
    DensityMatrix,
    StateVector,
    hermitian_eigenvalues,
    partial_trace,
    pure_density,
    tensor,
    trace_distance,
    von_neumann_entropy,
)
from .machine import (
    T_STAR,
    FlipScenario,
    FlipTriple,
    MachineModel,
    TaggedState,
    apply_flip_channel,
    flip_ket,
    machine_from_gram,
    member_ket,
)
from .report import VerificationReport, verify_scenario
from .search import SearchConfig, SearchResult, minimize_deviation
