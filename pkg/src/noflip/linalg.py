"""Dense complex linear algebra for small composite quantum systems.

Tensor factors are ordered first-factor-slowest (row-major), so the amplitude
of ``|i_0 i_1 ... i_k>`` sits at the C-order flat index of ``(i_0, ..., i_k)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

DEFAULT_TOL = 1e-9

__all__ = [
    "DEFAULT_TOL",
    "StateVector",
    "DensityMatrix",
    "ket",
    "tensor",
    "pure_density",
    "partial_trace",
    "reduced_state",
    "hermitian_eigh",
    "hermitian_eigenvalues",
    "von_neumann_entropy",
    "binary_entropy",
    "trace_distance",
]


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitudes over a tensor-factor layout.

    The vector need not be normalized; ``normalized`` reports whether it is.
    """

    amplitudes: np.ndarray
    layout: tuple[int, ...]

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amplitudes))
        layout = tuple(int(d) for d in self.layout)
        if not layout or any(d < 1 for d in layout):
            raise ValueError(f"invalid layout {layout}")
        if math.prod(layout) != amps.size:
            raise ValueError(
                f"layout {layout} has {math.prod(layout)} slots but got {amps.size} amplitudes"
            )
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "layout", layout)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def is_normalized(self, tol: float = DEFAULT_TOL) -> bool:
        return abs(self.norm_squared() - 1.0) <= tol

    def normalize(self) -> "StateVector":
        nrm = math.sqrt(self.norm_squared())
        if nrm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / nrm, self.layout)

    def inner(self, other: "StateVector") -> complex:
        """<self|other>."""
        if self.layout != other.layout:
            raise ValueError(f"layout mismatch {self.layout} vs {other.layout}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __add__(self, other: "StateVector") -> "StateVector":
        if self.layout != other.layout:
            raise ValueError(f"layout mismatch {self.layout} vs {other.layout}")
        return StateVector(self.amplitudes + other.amplitudes, self.layout)

    def __sub__(self, other: "StateVector") -> "StateVector":
        return self + (-1.0) * other

    def __mul__(self, scalar: complex) -> "StateVector":
        return StateVector(complex(scalar) * self.amplitudes, self.layout)

    __rmul__ = __mul__

    def __neg__(self) -> "StateVector":
        return (-1.0) * self

    def __matmul__(self, other: "StateVector") -> "StateVector":
        return tensor(self, other)

    def __repr__(self):
        return f"StateVector(layout={self.layout}, amplitudes={np.round(self.amplitudes, 12)})"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix.

    Validation runs on construction unless ``check=False``; the eigenvalue
    test uses the Jacobi solver below.
    """

    entries: np.ndarray
    check: bool = True

    def __post_init__(self):
        m = _frozen(self.entries)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        object.__setattr__(self, "entries", m)
        if self.check:
            if np.max(np.abs(m - m.conj().T)) > 1e-10:
                raise ValueError("density matrix is not Hermitian within 1e-10")
            tr = np.trace(m)
            if abs(tr - 1.0) > 1e-9:
                raise ValueError(f"density matrix trace {tr.real:.12g} differs from 1")
            lo = hermitian_eigenvalues(m)[0]
            if lo < -1e-9:
                raise ValueError(f"density matrix has negative eigenvalue {lo:.3e}")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return hermitian_eigenvalues(self.entries)

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim})"


def ket(amplitudes: Iterable[complex], layout: Sequence[int] | None = None) -> StateVector:
    """Build a StateVector; the layout defaults to a single factor."""
    amps = np.asarray(list(amplitudes), dtype=complex)
    return StateVector(amps, tuple(layout) if layout is not None else (amps.size,))


def tensor(*factors: StateVector) -> StateVector:
    """Kronecker product, first factor slowest."""
    if not factors:
        raise ValueError("tensor needs at least one factor")
    amps = factors[0].amplitudes
    layout = factors[0].layout
    for f in factors[1:]:
        amps = np.kron(amps, f.amplitudes)
        layout = layout + f.layout
    return StateVector(amps, layout)


def pure_density(psi: StateVector, tol: float = DEFAULT_TOL) -> DensityMatrix:
    if not psi.is_normalized(tol):
        raise ValueError(f"state is not normalized (|psi|^2 = {psi.norm_squared():.12g})")
    v = psi.amplitudes
    return DensityMatrix(np.outer(v, v.conj()), check=False)


def _as_matrix(rho) -> np.ndarray:
    return rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def partial_trace(rho, layout: Sequence[int], keep: Iterable[int]) -> DensityMatrix:
    """Trace out every factor not listed in ``keep``.

    Kept factors retain their original relative order.
    """
    m = _as_matrix(rho)
    layout = tuple(int(d) for d in layout)
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep must name at least one factor")
    if math.prod(layout) != m.shape[0] or m.shape[0] != m.shape[1]:
        raise ValueError(f"layout {layout} is inconsistent with matrix shape {m.shape}")
    if keep[0] < 0 or keep[-1] >= len(layout):
        raise ValueError(f"keep indices {keep} out of range for {len(layout)} factors")
    n = len(layout)
    t = m.reshape(layout + layout)
    traced = [k for k in range(n) if k not in keep]
    # einsum labels: row index i -> letter i, column index -> letter n+i
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if 2 * n > len(letters):
        raise ValueError("too many tensor factors")
    rows = list(letters[:n])
    cols = list(letters[n : 2 * n])
    for k in traced:
        cols[k] = rows[k]
    out = "".join(rows[k] for k in keep) + "".join(cols[k] for k in keep)
    reduced = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    d = math.prod(layout[k] for k in keep)
    return DensityMatrix(reduced.reshape(d, d), check=False)


def reduced_state(psi: StateVector, keep: Iterable[int]) -> DensityMatrix:
    """Marginal of a pure state without forming the full outer product."""
    keep = sorted(set(int(k) for k in keep))
    n = len(psi.layout)
    t = psi.amplitudes.reshape(psi.layout)
    traced = [k for k in range(n) if k not in keep]
    t = np.transpose(t, keep + traced)
    d = math.prod(psi.layout[k] for k in keep)
    mat = t.reshape(d, -1)
    return DensityMatrix(mat @ mat.conj().T, check=False)


def hermitian_eigh(m, tol: float = 1e-13, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi.

    Returns ``(w, v)`` with ascending eigenvalues ``w`` and eigenvectors in the
    columns of ``v``. Sweeps stop once the off-diagonal Frobenius mass drops
    below ``tol * max(1, ||m||_F)``.
    """
    a = np.array(_as_matrix(m), dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.size and np.max(np.abs(a - a.conj().T)) > 1e-10:
        raise ValueError("matrix is not Hermitian within 1e-10")
    a = 0.5 * (a + a.conj().T)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    threshold = tol * max(1.0, float(np.linalg.norm(a)))

    def off_mass():
        return float(np.linalg.norm(a - np.diag(np.diag(a))))

    for _ in range(max_sweeps):
        if off_mass() < threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r < 1e-300:
                    continue
                phase = apq / r
                app, aqq = a[p, p].real, a[q, q].real
                theta = (aqq - app) / (2.0 * r)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # J = diag(1, conj(phase)) @ [[c, s], [-s, c]]
                j = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ j
                a[idx, :] = j.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = app - t * r
                a[q, q] = aqq + t * r
                v[:, idx] = v[:, idx] @ j
    else:
        if off_mass() >= threshold:
            raise np.linalg.LinAlgError(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.diag(a).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def hermitian_eigenvalues(m) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix."""
    return hermitian_eigh(m)[0]


def von_neumann_entropy(rho, clamp: float = 1e-9) -> float:
    """Entropy in bits, with 0 log 0 = 0."""
    w = hermitian_eigenvalues(_as_matrix(rho))
    if w.size and w[0] < -clamp:
        raise ValueError(f"eigenvalue {w[0]:.3e} below -{clamp:g}; not a density matrix")
    w = w[w > 0.0]
    return float(-np.sum(w * np.log2(w))) + 0.0


def binary_entropy(p: float) -> float:
    """Entropy in bits of the distribution (p, 1 - p)."""
    return float(sum(-x * math.log2(x) for x in (p, 1.0 - p) if x > 0.0))


def trace_distance(rho, sigma) -> float:
    """Half the trace norm of ``rho - sigma``."""
    a, b = _as_matrix(rho), _as_matrix(sigma)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    return float(0.5 * np.sum(np.abs(hermitian_eigenvalues(a - b))))
