"""Bloch-sphere geometry of single-qubit pure states."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .linalg import DEFAULT_TOL, StateVector, ket
from .machine import FlipTriple

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class DegenerateTripleError(ValueError):
    """Two members of a triple coincide up to phase."""

    def __init__(self, pair: tuple[int, int]):
        self.pair = pair
        super().__init__(f"states s{pair[0]} and s{pair[1]} are identical up to a global phase")


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def norm(self) -> float:
        return math.sqrt(self.x**2 + self.y**2 + self.z**2)


@dataclass(frozen=True, eq=False)
class QubitTriple:
    s0: StateVector
    s1: StateVector
    s2: StateVector

    def __post_init__(self):
        for i, s in enumerate(self.states):
            if s.layout != (2,):
                raise ValueError(f"s{i} is not a single qubit (layout {s.layout})")
            if not s.is_normalized():
                raise ValueError(f"s{i} is not normalized")

    @classmethod
    def from_amplitudes(cls, *states) -> "QubitTriple":
        return cls(*(ket(s) for s in states))

    @property
    def states(self) -> tuple[StateVector, StateVector, StateVector]:
        return (self.s0, self.s1, self.s2)

    def degenerate_pairs(self, tol: float = DEFAULT_TOL) -> list[tuple[int, int]]:
        """Index pairs whose states coincide up to phase."""
        out = []
        for i, j in ((0, 1), (0, 2), (1, 2)):
            overlap = abs(self.states[i].inner(self.states[j]))
            if math.sqrt(max(0.0, 1.0 - overlap**2)) <= tol:
                out.append((i, j))
        return out


class CanonicalForm(NamedTuple):
    """Result of :func:`canonicalize_triple`.

    ``unitary`` maps each raw state onto its canonical form up to phase; when
    ``reflected`` is set the complex conjugate of that image is the canonical
    state (the Bloch reflection y -> -y).
    """

    triple: FlipTriple
    unitary: np.ndarray
    reflected: bool


def bloch_vector(psi: StateVector, tol: float = DEFAULT_TOL) -> BlochVector:
    if psi.layout != (2,):
        raise ValueError(f"expected a single qubit, got layout {psi.layout}")
    if not psi.is_normalized(tol):
        raise ValueError(f"state is not normalized (|psi|^2 = {psi.norm_squared():.12g})")
    a0, a1 = psi.amplitudes
    cross = a0.conjugate() * a1
    return BlochVector(2.0 * cross.real, 2.0 * cross.imag, abs(a0) ** 2 - abs(a1) ** 2)


def coplanarity_det(t: QubitTriple) -> float:
    """Determinant of the stacked Bloch vectors (rows s0, s1, s2)."""
    rows = np.array([bloch_vector(s).as_array() for s in t.states])
    return float(np.linalg.det(rows))


def is_great_circle(t: QubitTriple, tol: float = DEFAULT_TOL) -> bool:
    """True when the three Bloch vectors are coplanar with the origin."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    return abs(coplanarity_det(t)) <= tol


def _phase_fixed(v: np.ndarray) -> np.ndarray:
    # |0> coefficient real non-negative; if it vanishes, |1> coefficient real positive
    if abs(v[0]) > 1e-15:
        return v * (abs(v[0]) / v[0])
    return v * (abs(v[1]) / v[1])


def canonicalize_triple(t: QubitTriple, tol: float = DEFAULT_TOL) -> CanonicalForm:
    """Rotate a triple into the form |0>, a|0>+b|1>, c|0>+d e^{i theta}|1>.

    Raises DegenerateTripleError when s1 or s2 coincides with s0 up to phase,
    and ValueError when either is orthogonal to s0 (a = 0 or c = 0 has no
    canonical form).
    """
    for pair in ((0, 1), (0, 2)):
        if pair in t.degenerate_pairs(tol):
            raise DegenerateTripleError(pair)
    s0, s1, s2 = (s.amplitudes for s in t.states)
    # rows <s0| and <s0_perp|
    u = np.array([[s0[0].conjugate(), s0[1].conjugate()], [-s0[1], s0[0]]])
    v1 = _phase_fixed(u @ s1)
    if abs(v1[0]) <= tol:
        raise ValueError("s1 is orthogonal to s0; the canonical form needs a > 0")
    # rotate about z so that s1's |1> coefficient is real positive
    chi = cmath.phase(v1[1])
    u = np.diag([1.0, cmath.exp(-1j * chi)]) @ u
    v1 = _phase_fixed(u @ s1)
    v2 = _phase_fixed(u @ s2)
    if abs(v2[0]) <= tol:
        raise ValueError("s2 is orthogonal to s0; the canonical form needs c > 0")
    a, b = v1[0].real, abs(v1[1])
    c, d = v2[0].real, abs(v2[1])
    theta = cmath.phase(v2[1]) % (2 * math.pi) if d > 0 else 0.0
    reflected = theta > math.pi
    if reflected:
        theta = 2 * math.pi - theta
    # renormalize away rounding
    n1, n2 = math.hypot(a, b), math.hypot(c, d)
    triple = FlipTriple(a / n1, b / n1, c / n2, d / n2, theta)
    return CanonicalForm(triple, u, reflected)


def great_circle_flipper(n: BlochVector, tol: float = DEFAULT_TOL) -> np.ndarray:
    """The unitary n . sigma, which flips every state on the great circle normal to n."""
    if abs(n.norm() - 1.0) > tol:
        raise ValueError(f"axis must be a unit vector, |n| = {n.norm():.12g}")
    return n.x * PAULI_X + n.y * PAULI_Y + n.z * PAULI_Z


def state_from_bloch(n: BlochVector) -> StateVector:
    """Pure state with the given Bloch vector, phase-fixed like canonical states."""
    theta = math.acos(max(-1.0, min(1.0, n.z)))
    phi = math.atan2(n.y, n.x)
    return ket([math.cos(theta / 2), cmath.exp(1j * phi) * math.sin(theta / 2)])
