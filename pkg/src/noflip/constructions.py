"""The three shared-state set-ups and everything derived from them.

Each quantity comes in two flavours: a closed form written directly in terms
of the triple and machine overlaps, and an explicit route that builds the
state vector, applies the machine through :func:`apply_flip_channel` and
traces out Bob.  Agreement between the two is what the verification reports
check.

Set-ups:

* signalling: Alice holds a qutrit, Bob a qubit, ``(|0>|0> + |1>|psi> + |2>|phi>)/sqrt(3)``;
* entanglement: five qubits A, B1..B4 with the machine acting on B4;
* product: three qubits A, B1, B2 forming a product across A:B, machine on B2.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    DensityMatrix,
    StateVector,
    binary_entropy,
    ket,
    reduced_state,
    tensor,
    trace_distance,
    von_neumann_entropy,
)
from .machine import (
    FlipScenario,
    FlipTriple,
    MachineModel,
    TaggedState,
    apply_flip_channel,
    flip_ket,
    member_ket,
)

CONSTRAINTS = ("entry01", "entry02", "entry12", "entry21")

_ZERO = ket([1.0, 0.0])
_ONE = ket([0.0, 1.0])


def _basis(i: int, dim: int) -> StateVector:
    v = np.zeros(dim, dtype=complex)
    v[i] = 1.0
    return ket(v)


def _bits(s: str) -> StateVector:
    return tensor(*(_ONE if ch == "1" else _ZERO for ch in s))


# --------------------------------------------------------------------------
# signalling set-up


def signalling_tagged(triple: FlipTriple) -> TaggedState:
    k = 1 / math.sqrt(3)
    return TaggedState.from_terms(
        1, [(k, "zero", _basis(0, 3)), (k, "psi", _basis(1, 3)), (k, "phi", _basis(2, 3))]
    )


def build_signalling_state(triple: FlipTriple) -> StateVector:
    """Alice's qutrit entangled with Bob's qubit, layout [3, 2]."""
    return signalling_tagged(triple).resolve(triple)


def alice_marginal_initial(triple: FlipTriple) -> DensityMatrix:
    a, c, w = triple.a, triple.c, triple.overlap
    m = np.eye(3, dtype=complex)
    m[0, 1] = m[1, 0] = a
    m[0, 2] = m[2, 0] = c
    m[1, 2] = w.conjugate()  # <phi|psi>
    m[2, 1] = w
    return DensityMatrix(m / 3)


def alice_marginal_final(scenario: FlipScenario) -> DensityMatrix:
    t, mach = scenario.triple, scenario.machine
    a, c, w = t.a, t.c, t.overlap
    e_mu, e_nu = cmath.exp(1j * mach.mu), cmath.exp(1j * mach.nu)
    m = np.eye(3, dtype=complex)
    m[0, 1] = -a * e_mu.conjugate() * mach.overlap("psi", "zero")
    m[1, 0] = -a * e_mu * mach.overlap("zero", "psi")
    m[0, 2] = -c * e_nu.conjugate() * mach.overlap("phi", "zero")
    m[2, 0] = -c * e_nu * mach.overlap("zero", "phi")
    m[1, 2] = w * cmath.exp(1j * (mach.mu - mach.nu)) * mach.overlap("phi", "psi")
    m[2, 1] = w.conjugate() * cmath.exp(1j * (mach.nu - mach.mu)) * mach.overlap("psi", "phi")
    return DensityMatrix(m / 3)


def signalling_marginals_explicit(scenario: FlipScenario) -> tuple[DensityMatrix, DensityMatrix]:
    """Alice's marginal before and after Bob's machine, by partial trace."""
    tagged = signalling_tagged(scenario.triple)
    before = reduced_state(tagged.resolve(scenario.triple), keep=[0])
    after = reduced_state(apply_flip_channel(tagged, scenario), keep=[0])
    return before, after


def signalling_deviation(scenario: FlipScenario) -> float:
    """Trace distance between Alice's marginals before and after flipping."""
    return trace_distance(alice_marginal_initial(scenario.triple), alice_marginal_final(scenario))


def nosignalling_residuals(scenario: FlipScenario) -> dict[str, float]:
    """How far each marginal-equality constraint is from holding.

    Keys name the entry of Alice's marginal being compared: entry01/entry02
    are the (0,1)/(0,2) entries, entry12/entry21 the (1,2)/(2,1)
    entries; each residual is the larger of the two printed equalities.
    """
    t, m = scenario.triple, scenario.machine
    X, Y, w = scenario.X, scenario.Y, t.overlap
    rel = cmath.exp(1j * (m.mu - m.nu))
    return {
        "entry01": max(abs(t.a + t.a * X), abs(t.a + t.a * X.conjugate())),
        "entry02": max(abs(t.c + t.c * Y), abs(t.c + t.c * Y.conjugate())),
        "entry12": abs(w.conjugate() - rel * w * m.overlap("phi", "psi")),
        "entry21": abs(w - rel.conjugate() * w.conjugate() * m.overlap("psi", "phi")),
    }


def candidate_witness() -> MachineModel:
    """Machine with M_psi = M_phi = -M_0 and mu = nu = 0.

    Satisfies the (0,1) and (0,2) constraints for every triple; it satisfies
    the remaining two exactly when <psi|phi> is real.
    """
    g = np.array([[1, -1, -1], [-1, 1, 1], [-1, 1, 1]], dtype=complex)
    return MachineModel(0.0, 0.0, g)


@dataclass(frozen=True, eq=False)
class FeasibilityVerdict:
    feasible: bool
    witness: MachineModel | None
    violated: tuple[str, ...]
    residuals: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "violated": list(self.violated),
            "residuals": self.residuals,
            "witness": self.witness.to_dict() if self.witness is not None else None,
        }


def nosignalling_feasibility(triple: FlipTriple, tol: float = DEFAULT_TOL) -> FeasibilityVerdict:
    """Can some machine leave Alice's marginal untouched?

    The (0,1) and (0,2) constraints force |X| = |Y| = 1, i.e. both machine
    states are phase multiples of M_0.  Plugging that into the (1,2)
    constraint leaves <phi|psi> = <psi|phi>, whose imaginary part is
    b d sin(theta).  So a machine exists iff b = 0, d = 0 or sin(theta) = 0.
    """
    candidate = candidate_witness()
    residuals = nosignalling_residuals(FlipScenario(triple, candidate))
    if triple.is_great_circle(tol):
        return FeasibilityVerdict(True, candidate, (), residuals)
    return FeasibilityVerdict(False, None, ("entry12", "entry21"), residuals)


# --------------------------------------------------------------------------
# entanglement set-up


def entanglement_tagged(triple: FlipTriple) -> TaggedState:
    k = 1 / math.sqrt(8)
    psi_bar, phi_bar = flip_ket(triple, "psi"), flip_ket(triple, "phi")
    terms = [(k, "zero", tensor(_bits(s), _ONE)) for s in ("000", "111")]
    terms += [(-k, "psi", tensor(_bits(s), psi_bar)) for s in ("010", "100", "101")]
    terms += [(-k, "phi", tensor(_bits(s), phi_bar)) for s in ("011", "110", "001")]
    return TaggedState.from_terms(4, terms)


def build_entanglement_state(triple: FlipTriple) -> StateVector:
    """Five qubits A, B1, B2, B3, B4 before the machine acts on B4."""
    return entanglement_tagged(triple).resolve(triple)


def entanglement_marginal_initial(triple: FlipTriple) -> DensityMatrix:
    off = triple.a**2 + triple.c**2 + 2 * abs(triple.overlap) ** 2
    return DensityMatrix(np.array([[4, off], [off, 4]], dtype=complex) / 8)


def _final_offdiag(scenario: FlipScenario) -> complex:
    t = scenario.triple
    return 2 * scenario.Z - t.a**2 * scenario.X.conjugate() - t.c**2 * scenario.Y


def entanglement_marginal_final(scenario: FlipScenario) -> DensityMatrix:
    off = _final_offdiag(scenario)
    return DensityMatrix(np.array([[4, off], [off.conjugate(), 4]], dtype=complex) / 8)


def entanglement_states(scenario: FlipScenario) -> tuple[StateVector, StateVector]:
    """The five-qubit state and the 96-dim state after the machine acts on B4."""
    tagged = entanglement_tagged(scenario.triple)
    return tagged.resolve(scenario.triple), apply_flip_channel(tagged, scenario)


def entanglement_marginals_explicit(scenario: FlipScenario) -> tuple[DensityMatrix, DensityMatrix]:
    before, after = entanglement_states(scenario)
    return reduced_state(before, keep=[0]), reduced_state(after, keep=[0])


def lambda_pair(scenario: FlipScenario) -> tuple[float, float]:
    """Largest eigenvalues of Alice's qubit marginal before and after, closed form."""
    t = scenario.triple
    lam_i = 0.5 + (2 * abs(t.overlap) ** 2 + t.a**2 + t.c**2) / 8
    lam_f = 0.5 + abs(_final_offdiag(scenario)) / 8
    return lam_i, lam_f


def lambda_pair_explicit(scenario: FlipScenario) -> tuple[float, float]:
    before, after = entanglement_marginals_explicit(scenario)
    return float(before.eigenvalues()[-1]), float(after.eigenvalues()[-1])


@dataclass(frozen=True)
class AppendixReport:
    X: complex
    Y: complex
    Z: float
    terms: tuple[float, float, float, float, float, float]
    lhs_total: float

    def squared_difference(self, triple: FlipTriple) -> float:
        """(2|<psi|phi>|^2 + a^2 + c^2)^2 - |2Z - a^2 X* - c^2 Y|^2, computed directly."""
        p = abs(triple.overlap) ** 2
        lhs = 2 * p + triple.a**2 + triple.c**2
        rhs = 2 * self.Z - triple.a**2 * self.X.conjugate() - triple.c**2 * self.Y
        return lhs**2 - abs(rhs) ** 2


def appendix_terms(scenario: FlipScenario) -> AppendixReport:
    """Split lambda_i >= lambda_f into six separately non-negative terms."""
    t = scenario.triple
    X, Y, Z = scenario.X, scenario.Y, scenario.Z
    a2, c2 = t.a**2, t.c**2
    p = abs(t.overlap) ** 2
    terms = (
        a2 * a2 * (1 - abs(X) ** 2),
        c2 * c2 * (1 - abs(Y) ** 2),
        2 * a2 * c2 * (1 - (X * Y).real),
        4 * a2 * (p + Z * X.real),
        4 * c2 * (p + Z * Y.real),
        4 * (p * p - Z * Z),
    )
    return AppendixReport(X, Y, Z, terms, math.fsum(terms))


def entanglement_entropies(scenario: FlipScenario) -> tuple[float, float]:
    """Entropy of entanglement (bits) across A:B before and after, explicit route."""
    before, after = entanglement_marginals_explicit(scenario)
    return von_neumann_entropy(before), von_neumann_entropy(after)


def entanglement_gain(scenario: FlipScenario) -> float:
    e_i, e_f = entanglement_entropies(scenario)
    return e_f - e_i


def entanglement_gain_closed_form(scenario: FlipScenario) -> float:
    lam_i, lam_f = lambda_pair(scenario)
    return binary_entropy(lam_f) - binary_entropy(lam_i)


# --------------------------------------------------------------------------
# product set-up


def _product_scale(triple: FlipTriple) -> float:
    s = triple.b**2 + triple.d**2
    if s <= 1e-12:
        raise ValueError("b = d = 0: the product-state normalization is singular")
    return 1 / math.sqrt(2 * s)


def product_tagged(triple: FlipTriple) -> TaggedState:
    """Bob's B2 carries psi next to A=0, phi next to A=1; the swapped partners are |0>."""
    k = _product_scale(triple)
    psi, phi = member_ket(triple, "psi"), member_ket(triple, "phi")
    return TaggedState.from_terms(
        2,
        [
            (k, "psi", tensor(_ZERO, _ZERO)),
            (-k, "zero", tensor(_ZERO, psi)),
            (k, "phi", tensor(_ONE, _ZERO)),
            (-k, "zero", tensor(_ONE, phi)),
        ],
    )


def build_product_state(triple: FlipTriple) -> StateVector:
    """Three qubits A, B1, B2, written as a sum of antisymmetrized pairs."""
    return product_tagged(triple).resolve(triple)


def build_product_state_factored(triple: FlipTriple) -> StateVector:
    """The same state written as (b|0> + d e^{i theta}|1>)_A times the B1B2 singlet."""
    alice = ket([triple.b, triple.d * cmath.exp(1j * triple.theta)])
    singlet = ket([0, 1, -1, 0], (2, 2)) * (1 / math.sqrt(2))
    return tensor(alice.normalize(), singlet)


def product_normalization(scenario: FlipScenario) -> float:
    """N = 2 + a^2 Re{e^{-i mu}<M_psi|M_0>} + c^2 Re{e^{-i nu}<M_phi|M_0>}."""
    t, m = scenario.triple, scenario.machine
    return (
        2
        + t.a**2 * (cmath.exp(-1j * m.mu) * m.overlap("psi", "zero")).real
        + t.c**2 * (cmath.exp(-1j * m.nu) * m.overlap("phi", "zero")).real
    )


class ProductResult(NamedTuple):
    state: StateVector
    n_value: float
    entanglement: float
    n_closed_form: float


def product_final(scenario: FlipScenario) -> ProductResult:
    """Flip B2 of the product state.

    ``n_value`` is the squared norm of the unnormalized output with the
    1/sqrt(b^2 + d^2) prefactor stripped but the 1/sqrt(2) kept, which is the
    level at which the closed-form N applies.
    """
    t = scenario.triple
    raw = apply_flip_channel(product_tagged(t), scenario)
    n_value = raw.norm_squared() * (t.b**2 + t.d**2)
    state = raw.normalize()
    ent = von_neumann_entropy(reduced_state(state, keep=[0]))
    return ProductResult(state, n_value, ent, product_normalization(scenario))
