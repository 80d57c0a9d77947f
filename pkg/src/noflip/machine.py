"""The hypothetical exact flipping machine acting on three fixed qubit states.

The machine is only defined on ``|0>``, ``|psi> = a|0> + b|1>`` and
``|phi> = c|0> + d e^{i theta}|1>``.  It sends them to their orthogonal
partners, multiplied by phases ``1, e^{i mu}, e^{i nu}``, and leaves its own
register in ``|M_0>, |M_psi>, |M_phi>`` respectively.  Only the overlaps of
those three machine states ever enter a computed quantity, so a machine is
specified by ``(mu, nu, gram)`` and realized in a 3-dim register.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .linalg import DEFAULT_TOL, StateVector, hermitian_eigh, ket

TAGS = ("zero", "psi", "phi")
MACHINE_DIM = 3


class UndefinedInputError(ValueError):
    """Raised when the machine is asked to act on a state it is not defined on."""


class GramError(ValueError):
    """Raised for a matrix that is not a valid Gram matrix of unit vectors."""

    def __init__(self, message: str, min_eigenvalue: float | None = None):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(message)


@dataclass(frozen=True)
class FlipTriple:
    """Canonical parameters of the three states the machine flips."""

    a: float
    b: float
    c: float
    d: float
    theta: float

    def __post_init__(self):
        for name in ("a", "b", "c", "d", "theta"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if abs(self.a**2 + self.b**2 - 1.0) > 1e-10:
            raise ValueError(f"a^2 + b^2 = {self.a**2 + self.b**2:.12g}, expected 1")
        if abs(self.c**2 + self.d**2 - 1.0) > 1e-10:
            raise ValueError(f"c^2 + d^2 = {self.c**2 + self.d**2:.12g}, expected 1")
        if not (self.a > 0 and self.c > 0):
            raise ValueError("canonical form requires a > 0 and c > 0")
        if self.b < 0 or self.d < 0:
            raise ValueError("canonical form requires b >= 0 and d >= 0")
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta = {self.theta!r} outside [0, pi]")

    @classmethod
    def from_ac(cls, a: float, c: float, theta: float) -> "FlipTriple":
        return cls(a, math.sqrt(max(0.0, 1 - a * a)), c, math.sqrt(max(0.0, 1 - c * c)), theta)

    @classmethod
    def random(cls, rng: np.random.Generator) -> "FlipTriple":
        """Uniform angles: a = cos(alpha), c = cos(gamma) with alpha, gamma in [0, pi/2)."""
        alpha, gamma = rng.uniform(0.0, math.pi / 2, size=2)
        theta = rng.uniform(0.0, math.pi)
        return cls(math.cos(alpha), math.sin(alpha), math.cos(gamma), math.sin(gamma), theta)

    @property
    def overlap(self) -> complex:
        """<psi|phi>."""
        return self.a * self.c + self.b * self.d * cmath.exp(1j * self.theta)

    def det_closed_form(self) -> float:
        """4 a b c d sin(theta), the Bloch coplanarity determinant."""
        return 4 * self.a * self.b * self.c * self.d * math.sin(self.theta)

    def is_great_circle(self, tol: float = DEFAULT_TOL) -> bool:
        return self.b <= tol or self.d <= tol or abs(math.sin(self.theta)) <= tol

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.a, self.b, self.c, self.d, self.theta)


T_STAR = FlipTriple(1 / math.sqrt(2), 1 / math.sqrt(2), 1 / math.sqrt(2), 1 / math.sqrt(2), math.pi / 2)


def member_ket(triple: FlipTriple, which: str) -> StateVector:
    """|0>, |psi> or |phi>."""
    if which == "zero":
        return ket([1.0, 0.0])
    if which == "psi":
        return ket([triple.a, triple.b])
    if which == "phi":
        return ket([triple.c, triple.d * cmath.exp(1j * triple.theta)])
    raise UndefinedInputError(f"unknown member {which!r}; expected one of {TAGS}")


def flip_ket(triple: FlipTriple, which: str) -> StateVector:
    """The orthogonal partner: |1>, b|0> - a|1> or d e^{-i theta}|0> - c|1>."""
    if which == "zero":
        return ket([0.0, 1.0])
    if which == "psi":
        return ket([triple.b, -triple.a])
    if which == "phi":
        return ket([triple.d * cmath.exp(-1j * triple.theta), -triple.c])
    raise UndefinedInputError(f"unknown member {which!r}; expected one of {TAGS}")


def machine_from_gram(gram, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Realize three unit vectors in C^3 with the given Gram matrix.

    Returns a 3x3 array whose columns are M_0, M_psi, M_phi, with
    ``gram[j, k] = <M_j|M_k>``.  M_0 is rotated onto the first basis vector.
    """
    g = np.asarray(gram, dtype=complex)
    if g.shape != (3, 3):
        raise GramError(f"Gram matrix must be 3x3, got {g.shape}")
    if np.max(np.abs(g - g.conj().T)) > 1e-10:
        raise GramError("Gram matrix is not Hermitian")
    if np.max(np.abs(np.diag(g) - 1.0)) > tol:
        raise GramError("Gram matrix must have unit diagonal")
    w, v = hermitian_eigh(g)
    if w[0] < -tol:
        raise GramError(
            f"Gram matrix is not positive semidefinite (smallest eigenvalue {w[0]:.3e})",
            min_eigenvalue=float(w[0]),
        )
    w = np.clip(w, 0.0, None)
    # g = V diag(w) V^H, so the columns of sqrt(w) V^H have Gram matrix g
    factor = np.sqrt(w)[:, None] * v.conj().T
    _, r = np.linalg.qr(factor)
    r = r * (abs(r[0, 0]) / r[0, 0] if abs(r[0, 0]) > 0 else 1.0)
    return r


def gram_of(vectors: np.ndarray) -> np.ndarray:
    """Gram matrix of the columns of ``vectors``."""
    return vectors.conj().T @ vectors


@dataclass(frozen=True, eq=False)
class MachineModel:
    mu: float
    nu: float
    gram: np.ndarray
    realization: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        g = np.array(self.gram, dtype=complex)
        g = 0.5 * (g + g.conj().T)
        vecs = machine_from_gram(g)
        if np.max(np.abs(gram_of(vecs) - g)) > 1e-9:
            raise GramError("realized machine states do not reproduce the Gram matrix")
        g.setflags(write=False)
        vecs.setflags(write=False)
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "nu", float(self.nu))
        object.__setattr__(self, "gram", g)
        object.__setattr__(self, "realization", vecs)

    @classmethod
    def from_vectors(cls, mu: float, nu: float, m0, mpsi, mphi) -> "MachineModel":
        vecs = np.column_stack([np.asarray(m, dtype=complex) for m in (m0, mpsi, mphi)])
        vecs = vecs / np.linalg.norm(vecs, axis=0)
        return cls(mu, nu, gram_of(vecs))

    @classmethod
    def trivial(cls) -> "MachineModel":
        """All three machine states equal, no phases."""
        return cls(0.0, 0.0, np.ones((3, 3)))

    @classmethod
    def identity_gram(cls, mu: float = 0.0, nu: float = 0.0) -> "MachineModel":
        """Mutually orthogonal machine states."""
        return cls(mu, nu, np.eye(3))

    @classmethod
    def random(cls, rng: np.random.Generator) -> "MachineModel":
        vecs = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        mu, nu = rng.uniform(0.0, 2 * math.pi, size=2)
        return cls.from_vectors(mu, nu, *vecs.T)

    def state(self, which: str) -> StateVector:
        return ket(self.realization[:, TAGS.index(which)])

    def overlap(self, left: str, right: str) -> complex:
        """<M_left|M_right>."""
        return complex(self.gram[TAGS.index(left), TAGS.index(right)])

    def phase(self, which: str) -> complex:
        return {"zero": 1.0 + 0j, "psi": cmath.exp(1j * self.mu), "phi": cmath.exp(1j * self.nu)}[which]

    def to_dict(self) -> dict:
        return {
            "mu": self.mu,
            "nu": self.nu,
            "gram": [[[z.real, z.imag] for z in row] for row in self.gram.tolist()],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "MachineModel":
        extra = set(data) - {"mu", "nu", "gram"}
        if extra:
            raise ValueError(f"unknown machine keys: {sorted(extra)}")
        gram = np.array([[complex(re, im) for re, im in row] for row in data["gram"]])
        return cls(float(data["mu"]), float(data["nu"]), gram)


@dataclass(frozen=True, eq=False)
class FlipScenario:
    triple: FlipTriple
    machine: MachineModel

    @property
    def X(self) -> complex:
        return cmath.exp(1j * self.machine.mu) * self.machine.overlap("zero", "psi")

    @property
    def Y(self) -> complex:
        return cmath.exp(1j * self.machine.nu) * self.machine.overlap("zero", "phi")

    @property
    def Z(self) -> float:
        m = self.machine
        return (
            cmath.exp(1j * (m.mu - m.nu)) * self.triple.overlap**2 * m.overlap("phi", "psi")
        ).real


def _insert_factor(rest: np.ndarray, rest_layout: tuple[int, ...], target: int, k: np.ndarray) -> np.ndarray:
    t = np.multiply.outer(rest.reshape(rest_layout), k)
    return np.moveaxis(t, -1, target).ravel()


@dataclass(frozen=True, eq=False)
class TaggedState:
    """A composite state whose ``target`` qubit is written in the machine's inputs.

    ``branches[tag]`` holds the (unnormalized) amplitudes over all other
    factors that multiply the member state ``tag`` in the target slot.  Each
    construction fixes its own decomposition; the machine never infers one.
    """

    layout: tuple[int, ...]
    target: int
    branches: Mapping[str, np.ndarray]

    def __post_init__(self):
        layout = tuple(int(d) for d in self.layout)
        if not 0 <= self.target < len(layout) or layout[self.target] != 2:
            raise ValueError(f"target factor {self.target} must be a qubit in layout {layout}")
        rest = math.prod(layout) // 2
        branches = {}
        for tag, amps in self.branches.items():
            if tag not in TAGS:
                raise UndefinedInputError(f"the machine is not defined on {tag!r}")
            arr = np.array(amps, dtype=complex).ravel()
            if arr.size != rest:
                raise ValueError(f"branch {tag!r} has {arr.size} amplitudes, expected {rest}")
            arr.setflags(write=False)
            branches[tag] = arr
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "branches", branches)

    @classmethod
    def from_terms(cls, target: int, terms: Iterable[tuple[complex, str, StateVector]]) -> "TaggedState":
        """Sum of ``coefficient * rest`` with ``tag`` in the target slot.

        ``rest`` is a StateVector over every factor except the target.
        """
        branches: dict[str, np.ndarray] = {}
        layout = None
        for coeff, tag, rest in terms:
            full = rest.layout[:target] + (2,) + rest.layout[target:]
            if layout is None:
                layout = full
            elif full != layout:
                raise ValueError(f"inconsistent layouts {layout} and {full}")
            branches[tag] = branches.get(tag, 0) + coeff * rest.amplitudes
        if layout is None:
            raise ValueError("no terms given")
        return cls(layout, target, branches)

    @property
    def rest_layout(self) -> tuple[int, ...]:
        return self.layout[: self.target] + self.layout[self.target + 1 :]

    def resolve(self, triple: FlipTriple) -> StateVector:
        """The ordinary state vector this tagged sum denotes."""
        out = np.zeros(math.prod(self.layout), dtype=complex)
        for tag, rest in self.branches.items():
            out += _insert_factor(rest, self.rest_layout, self.target, member_ket(triple, tag).amplitudes)
        return StateVector(out, self.layout)

    def __add__(self, other: "TaggedState") -> "TaggedState":
        if (self.layout, self.target) != (other.layout, other.target):
            raise ValueError("tagged states live on different layouts")
        branches = dict(self.branches)
        for tag, amps in other.branches.items():
            branches[tag] = branches.get(tag, 0) + amps
        return TaggedState(self.layout, self.target, branches)

    def __mul__(self, scalar: complex) -> "TaggedState":
        return TaggedState(self.layout, self.target, {t: scalar * v for t, v in self.branches.items()})

    __rmul__ = __mul__


def apply_flip_channel(state: TaggedState, scenario: FlipScenario) -> StateVector:
    """Act with the machine on the target qubit, extended linearly over branches.

    A 3-dim machine register is appended as the last factor.  The result is
    not renormalized: the machine is not assumed unitary.
    """
    triple, machine = scenario.triple, scenario.machine
    out = np.zeros(math.prod(state.layout) * MACHINE_DIM, dtype=complex)
    for tag, rest in state.branches.items():
        flipped = _insert_factor(rest, state.rest_layout, state.target, flip_ket(triple, tag).amplitudes)
        out += machine.phase(tag) * np.kron(flipped, machine.realization[:, TAGS.index(tag)])
    return StateVector(out, state.layout + (MACHINE_DIM,))
