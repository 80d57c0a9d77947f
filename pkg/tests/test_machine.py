import cmath
import json
import math

import numpy as np
import pytest

from noflip.linalg import StateVector, ket, reduced_state
from noflip.machine import (
    T_STAR,
    FlipScenario,
    FlipTriple,
    GramError,
    MachineModel,
    TaggedState,
    UndefinedInputError,
    apply_flip_channel,
    flip_ket,
    gram_of,
    machine_from_gram,
    member_ket,
)

from conftest import random_scenario

S = 1 / math.sqrt(2)


def e(i, n):
    v = np.zeros(n, dtype=complex)
    v[i] = 1
    return v


def random_gram(rng):
    v = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    v /= np.linalg.norm(v, axis=0)
    return v.conj().T @ v


# --- triple and kets ------------------------------------------------------


def test_member_and_flip_kets_at_reference_point():
    np.testing.assert_allclose(member_ket(T_STAR, "psi").amplitudes, [S, S])
    np.testing.assert_allclose(member_ket(T_STAR, "phi").amplitudes, [S, 1j * S], atol=1e-16)
    np.testing.assert_allclose(flip_ket(T_STAR, "zero").amplitudes, [0, 1])
    np.testing.assert_allclose(flip_ket(T_STAR, "psi").amplitudes, [S, -S])
    np.testing.assert_allclose(flip_ket(T_STAR, "phi").amplitudes, [-1j * S, -S], atol=1e-16)


def test_flip_partners_are_orthogonal_unit(rng):
    for _ in range(1000):
        t = FlipTriple.random(rng)
        for w in ("zero", "psi", "phi"):
            m, f = member_ket(t, w), flip_ket(t, w)
            assert abs(m.inner(f)) <= 1e-12
            assert abs(f.norm_squared() - 1) <= 1e-12


def test_overlap_closed_form(rng):
    for _ in range(100):
        t = FlipTriple.random(rng)
        direct = np.vdot(member_ket(t, "psi").amplitudes, member_ket(t, "phi").amplitudes)
        assert abs(t.overlap - direct) <= 1e-14


def test_unknown_member_is_rejected():
    with pytest.raises(UndefinedInputError):
        member_ket(T_STAR, "plus")
    with pytest.raises(UndefinedInputError):
        flip_ket(T_STAR, "one")


@pytest.mark.parametrize(
    "args",
    [(0.5, 0.5, S, S, 1.0), (-S, S, S, S, 1.0), (S, -S, S, S, 1.0), (S, S, S, S, 4.0), (0.0, 1.0, S, S, 1.0)],
)
def test_triple_validation(args):
    with pytest.raises(ValueError):
        FlipTriple(*args)


# --- machine realization --------------------------------------------------


def test_machine_from_gram_examples():
    v = machine_from_gram(np.eye(3))
    np.testing.assert_allclose(gram_of(v), np.eye(3), atol=1e-12)
    v = machine_from_gram(np.ones((3, 3)))
    np.testing.assert_allclose(np.abs(v[:, 0]), [1, 0, 0], atol=1e-12)
    for k in (1, 2):
        np.testing.assert_allclose(v[:, k], v[:, 0], atol=1e-12)
    g = np.array([[1, 0.5, 0], [0.5, 1, 0], [0, 0, 1]])
    np.testing.assert_allclose(gram_of(machine_from_gram(g)), g, atol=1e-12)


def test_machine_from_gram_round_trip(rng):
    for _ in range(1000):
        g = random_gram(rng)
        assert np.max(np.abs(gram_of(machine_from_gram(g)) - g)) <= 1e-9


def test_machine_from_gram_rank_deficient(rng):
    # two-dim span: M_phi is a combination of M_0 and M_psi
    m0, m1 = e(0, 3), (e(0, 3) + 1j * e(1, 3)) / math.sqrt(2)
    m2 = (m0 - m1) / np.linalg.norm(m0 - m1)
    g = gram_of(np.column_stack([m0, m1, m2]))
    np.testing.assert_allclose(gram_of(machine_from_gram(g)), g, atol=1e-9)


def test_machine_from_gram_rejects_invalid():
    with pytest.raises(GramError) as exc:
        machine_from_gram([[1, 0.9, 0.9], [0.9, 1, -0.9], [0.9, -0.9, 1]])
    assert exc.value.min_eigenvalue < 0
    with pytest.raises(GramError, match="diagonal"):
        machine_from_gram(np.diag([1, 2, 1]))
    with pytest.raises(GramError, match="Hermitian"):
        machine_from_gram([[1, 0.5, 0], [0.1, 1, 0], [0, 0, 1]])
    with pytest.raises(GramError):
        machine_from_gram(np.eye(2))


def test_machine_model_json_round_trip(rng):
    m = MachineModel.random(rng)
    back = MachineModel.from_dict(json.loads(json.dumps(m.to_dict())))
    assert back.mu == m.mu and back.nu == m.nu
    np.testing.assert_array_equal(back.gram, m.gram)
    with pytest.raises(ValueError):
        MachineModel.from_dict({**m.to_dict(), "extra": 1})


def test_machine_model_overlaps_and_phases():
    m = MachineModel.identity_gram(mu=0.3, nu=-1.0)
    assert m.overlap("zero", "psi") == 0
    assert m.phase("psi") == pytest.approx(cmath.exp(0.3j))
    assert m.phase("zero") == 1
    assert abs(m.state("phi").inner(m.state("phi")) - 1) < 1e-12


def test_scenario_xyz_at_reference_point():
    s = FlipScenario(T_STAR, MachineModel.trivial())
    assert s.X == pytest.approx(1)
    assert s.Y == pytest.approx(1)
    # <psi|phi> = (1 + i)/2, squared = i/2
    assert s.Z == pytest.approx(0, abs=1e-15)


# --- apply_flip_channel ---------------------------------------------------


def test_apply_to_single_member_with_bystander():
    """A bystander qubit in |1> next to |psi>: output |1>|psi_bar>|M_psi> e^{i mu}."""
    m = MachineModel.random(np.random.default_rng(3))
    s = FlipScenario(T_STAR, m)
    tagged = TaggedState.from_terms(1, [(1.0, "psi", ket([0, 1]))])
    out = apply_flip_channel(tagged, s)
    expected = cmath.exp(1j * m.mu) * np.kron(np.kron([0, 1], [S, -S]), m.realization[:, 1])
    assert out.layout == (2, 2, 3)
    np.testing.assert_allclose(out.amplitudes, expected, atol=1e-14)


def test_apply_signalling_matches_hand_built_state(rng):
    for _ in range(50):
        s = random_scenario(rng)
        t, m = s.triple, s.machine
        k = 1 / math.sqrt(3)
        tagged = TaggedState.from_terms(1, [(k, w, ket(e(i, 3))) for i, w in enumerate(("zero", "psi", "phi"))])
        out = apply_flip_channel(tagged, s)
        expected = sum(
            k * m.phase(w) * np.kron(np.kron(e(i, 3), flip_ket(t, w).amplitudes), m.realization[:, i])
            for i, w in enumerate(("zero", "psi", "phi"))
        )
        np.testing.assert_allclose(out.amplitudes, expected, atol=1e-13)
        before = tagged.resolve(t)
        assert abs(before.norm_squared() - 1) < 1e-12


def test_apply_is_linear_over_branches(rng):
    s = random_scenario(rng)
    u = TaggedState.from_terms(0, [(0.3, "psi", ket([1, 0])), (0.2j, "zero", ket([0, 1]))])
    v = TaggedState.from_terms(0, [(-0.7, "phi", ket([1, 0])), (0.5, "psi", ket([0, 1]))])
    lhs = apply_flip_channel(u + 2.0 * v, s)
    rhs = apply_flip_channel(u, s).amplitudes + 2.0 * apply_flip_channel(v, s).amplitudes
    np.testing.assert_allclose(lhs.amplitudes, rhs, atol=1e-14)


def test_apply_output_norm_is_not_forced(rng):
    # with mutually orthogonal machine states the branches cannot interfere
    s = FlipScenario(T_STAR, MachineModel.identity_gram())
    tagged = TaggedState.from_terms(0, [(S, "psi", ket([1, 0])), (S, "zero", ket([1, 0]))])
    resolved = tagged.resolve(T_STAR)
    out = apply_flip_channel(tagged, s)
    assert resolved.norm_squared() == pytest.approx(0.5 * (1 + S) ** 2 + 0.25)
    assert out.norm_squared() == pytest.approx(1.0)


def test_tagged_state_rejects_undefined_members():
    with pytest.raises(UndefinedInputError):
        TaggedState((2, 2), 0, {"plus": np.ones(2)})
    with pytest.raises(ValueError):
        TaggedState((3, 2), 0, {"zero": np.ones(2)})


def test_flip_channel_keeps_machine_register_last(rng):
    s = random_scenario(rng)
    tagged = TaggedState.from_terms(0, [(1.0, "zero", ket([1, 0, 0]))])
    out = apply_flip_channel(tagged, s)
    assert out.layout == (2, 3, 3)
    # Bob's qubit factor is |1> tensor the others, so its marginal is |1><1|
    np.testing.assert_allclose(reduced_state(out, [0]).entries, np.diag([0, 1]), atol=1e-12)
