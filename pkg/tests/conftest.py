import math

import numpy as np
import pytest

from noflip.machine import FlipScenario, FlipTriple, MachineModel


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_scenario(rng):
    return FlipScenario(FlipTriple.random(rng), MachineModel.random(rng))


def random_great_circle_triple(rng):
    """A triple forced onto a great circle by one of the four boundary routes."""
    alpha, gamma = rng.uniform(0.05, math.pi / 2, size=2)
    a, b, c, d = math.cos(alpha), math.sin(alpha), math.cos(gamma), math.sin(gamma)
    theta = rng.uniform(0, math.pi)
    kind = rng.integers(4)
    if kind == 0:
        a, b = 1.0, 0.0
    elif kind == 1:
        c, d = 1.0, 0.0
    elif kind == 2:
        theta = 0.0
    else:
        theta = math.pi
    return FlipTriple(a, b, c, d, theta)


def random_off_circle_triple(rng, min_det=0.1):
    while True:
        t = FlipTriple.random(rng)
        if abs(t.det_closed_form()) >= min_det:
            return t


def random_unitary(rng, n=2):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
