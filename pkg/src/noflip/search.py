"""Search over machines for the smallest achievable signalling deviation.

A machine is parameterized by ten angles: ``mu``, ``nu`` and four angles
each for ``M_psi`` and ``M_phi`` (``M_0`` is pinned to the first basis
vector and the leading component of the other two is kept real, its phase
being absorbed into ``mu`` / ``nu``).  Every parameter vector is therefore a
valid machine.

All restarts run in lockstep through a vectorized Nelder-Mead so that each
step costs one batched objective evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constructions import signalling_deviation
from .machine import FlipScenario, FlipTriple, MachineModel

N_PARAMS = 10


@dataclass(frozen=True)
class SearchConfig:
    restarts: int = 32
    max_evals: int = 2000
    xatol: float = 1e-9
    seed: int = 0
    initial_step: float = 0.5

    def __post_init__(self):
        if self.restarts < 1 or self.max_evals < N_PARAMS + 3:
            raise ValueError(
                f"search budget too small: restarts={self.restarts}, max_evals={self.max_evals}"
            )
        if self.xatol <= 0 or self.initial_step <= 0:
            raise ValueError("xatol and initial_step must be positive")


@dataclass(frozen=True)
class RestartRecord:
    index: int
    start: tuple[float, ...]
    best_value: float
    evaluations: int
    iterations: int
    converged: bool


@dataclass(frozen=True, eq=False)
class SearchResult:
    infimum: float
    argmin: MachineModel
    best_restart: int
    trace: list[RestartRecord] = field(default_factory=list)


def _unit_vectors(angles: np.ndarray) -> np.ndarray:
    """(m, 4) angles -> (m, 3) unit vectors with real first component."""
    a1, a2, b1, b2 = angles.T
    s1 = np.sin(a1)
    return np.stack(
        [np.cos(a1) + 0j, s1 * np.cos(a2) * np.exp(1j * b1), s1 * np.sin(a2) * np.exp(1j * b2)],
        axis=1,
    )


def params_to_machine(p) -> MachineModel:
    p = np.asarray(p, dtype=float)
    mpsi = _unit_vectors(p[None, 2:6])[0]
    mphi = _unit_vectors(p[None, 6:10])[0]
    return MachineModel.from_vectors(p[0], p[1], [1, 0, 0], mpsi, mphi)


def batch_deviation(triple: FlipTriple, params: np.ndarray) -> np.ndarray:
    """Signalling deviation for a batch of parameter vectors, shape (m, 10).

    Both marginals have diagonal 1/3, so their difference is a traceless
    Hermitian matrix with zero diagonal and off-diagonals x, y, z.  Its
    characteristic polynomial is t^3 - p t - q with p = |x|^2 + |y|^2 + |z|^2
    and q = 2 Re(x z conj(y)); the roots follow from the trigonometric form.
    """
    params = np.atleast_2d(params)
    mu, nu = params[:, 0], params[:, 1]
    mpsi = _unit_vectors(params[:, 2:6])
    mphi = _unit_vectors(params[:, 6:10])
    w = triple.overlap
    x = triple.a * (1 + np.exp(-1j * mu) * mpsi[:, 0]) / 3
    y = triple.c * (1 + np.exp(-1j * nu) * mphi[:, 0]) / 3
    phi_psi = np.sum(mphi.conj() * mpsi, axis=1)
    z = (np.conj(w) - np.exp(1j * (mu - nu)) * w * phi_psi) / 3
    p = np.abs(x) ** 2 + np.abs(y) ** 2 + np.abs(z) ** 2
    q = 2 * np.real(x * z * np.conj(y))
    out = np.zeros(len(params))
    ok = p > 1e-300
    m = 2 * np.sqrt(p[ok] / 3)
    cos3 = np.clip(4 * q[ok] / m**3, -1.0, 1.0)
    phi0 = np.arccos(cos3) / 3
    roots = m[:, None] * np.cos(phi0[:, None] - 2 * np.pi * np.arange(3) / 3)
    out[ok] = 0.5 * np.sum(np.abs(roots), axis=1)
    return out


def _diameters(sim: np.ndarray) -> np.ndarray:
    diff = sim[:, :, None, :] - sim[:, None, :, :]
    return np.sqrt(np.max(np.sum(diff**2, axis=-1), axis=(1, 2)))


def nelder_mead_batch(f, x0: np.ndarray, step: float, max_evals: int, xatol: float):
    """Independent Nelder-Mead runs advanced together.

    ``f`` maps an (m, n) array to m values.  Uses the dimension-adapted
    coefficients of Gao and Han.  Each run stops when its simplex diameter
    falls below ``xatol`` or another step could exceed ``max_evals``.
    Returns (best points, best values, evaluation counts, iteration counts,
    converged flags).
    """
    runs, n = x0.shape
    alpha, gamma = 1.0, 1.0 + 2.0 / n
    rho, sigma = 0.75 - 1.0 / (2 * n), 1.0 - 1.0 / n

    sim = np.repeat(x0[:, None, :], n + 1, axis=1)
    sim[:, 1:, :] += step * np.eye(n)[None]
    fs = f(sim.reshape(-1, n)).reshape(runs, n + 1)
    nfev = np.full(runs, n + 1)
    nit = np.zeros(runs, dtype=int)
    converged = np.zeros(runs, dtype=bool)
    active = np.ones(runs, dtype=bool)

    while True:
        order = np.argsort(fs, axis=1, kind="stable")
        fs = np.take_along_axis(fs, order, axis=1)
        sim = np.take_along_axis(sim, order[:, :, None], axis=1)
        small = _diameters(sim) < xatol
        converged |= active & small
        active &= ~small & (nfev + n + 2 <= max_evals)
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        S, F = sim[idx], fs[idx]
        centroid = S[:, :-1].mean(axis=1)
        worst = S[:, -1]
        xr = centroid + alpha * (centroid - worst)
        fr = f(xr)
        nfev[idx] += 1

        expand = fr < F[:, 0]
        take_r = (fr >= F[:, 0]) & (fr < F[:, -2])
        outside = (fr >= F[:, -2]) & (fr < F[:, -1])
        inside = fr >= F[:, -1]
        x2 = np.where(
            expand[:, None],
            centroid + gamma * (xr - centroid),
            np.where(outside[:, None], centroid + rho * (xr - centroid), centroid + rho * (worst - centroid)),
        )
        f2 = np.full(idx.size, np.inf)
        need = ~take_r
        if need.any():
            f2[need] = f(x2[need])
            nfev[idx[need]] += 1

        new_x, new_f = xr.copy(), fr.copy()
        use2 = (expand & (f2 < fr)) | (outside & (f2 <= fr)) | (inside & (f2 < F[:, -1]))
        new_x[use2], new_f[use2] = x2[use2], f2[use2]
        shrink = (outside | inside) & ~use2
        keep = ~shrink
        S[keep, -1], F[keep, -1] = new_x[keep], new_f[keep]
        if shrink.any():
            Ss = S[shrink]
            Ss[:, 1:] = Ss[:, :1] + sigma * (Ss[:, 1:] - Ss[:, :1])
            F[shrink, 1:] = f(Ss[:, 1:].reshape(-1, n)).reshape(-1, n)
            S[shrink] = Ss
            nfev[idx[shrink]] += n
        sim[idx], fs[idx] = S, F
        nit[idx] += 1

    best = np.argmin(fs, axis=1)
    rows = np.arange(runs)
    return sim[rows, best], fs[rows, best], nfev, nit, converged


def start_points(config: SearchConfig) -> np.ndarray:
    rng = np.random.default_rng(config.seed)
    hi = np.array([2 * math.pi, 2 * math.pi] + [math.pi, math.pi, 2 * math.pi, 2 * math.pi] * 2)
    return rng.uniform(0.0, 1.0, size=(config.restarts, N_PARAMS)) * hi


def minimize_deviation(triple: FlipTriple, config: SearchConfig | None = None) -> SearchResult:
    """Multi-start minimization of the signalling deviation over all machines.

    The returned infimum is re-evaluated on the winning machine through
    :func:`signalling_deviation`.  Ties go to the lowest restart index.
    """
    config = config or SearchConfig()
    x0 = start_points(config)
    xs, vals, nfev, nit, conv = nelder_mead_batch(
        lambda p: batch_deviation(triple, p), x0, config.initial_step, config.max_evals, config.xatol
    )
    best = int(np.argmin(vals))
    machine = params_to_machine(xs[best])
    infimum = max(0.0, signalling_deviation(FlipScenario(triple, machine)))
    trace = [
        RestartRecord(i, tuple(map(float, x0[i])), float(vals[i]), int(nfev[i]), int(nit[i]), bool(conv[i]))
        for i in range(config.restarts)
    ]
    return SearchResult(infimum, machine, best, trace)
