from __future__ import annotations

import itertools

import numpy as np
import pytest

from hw_algebra import (
    DimensionError,
    NotUnitaryError,
    PauliLabel,
    PrimeDim,
    Verdict,
    action_of,
    apply_action,
    clifford_enumerate_projective,
    conjugate_by_action,
    fourier_gate,
    is_clifford,
    is_prime,
    make_pauli,
    make_phase,
    make_shift,
    operator_from_json,
    operators_close,
    pauli_compose,
    pauli_inverse,
    pauli_labels,
)

HADAMARD = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
T_GATE = np.diag([1, np.exp(1j * np.pi / 4)])


def test_prime_dim_validation():
    assert [p for p in range(20) if is_prime(p)] == [2, 3, 5, 7, 11, 13, 17, 19]
    assert PrimeDim(5).d == 5
    for bad in (0, 1, 4, 9, True, 2.0):
        with pytest.raises(DimensionError):
            PrimeDim(bad)


def test_qubit_paulis_follow_hermitian_convention():
    x = make_pauli(2, PauliLabel(2, 1, 0))
    z = make_pauli(2, PauliLabel(2, 0, 1))
    y = make_pauli(2, PauliLabel(2, 1, 1))
    assert np.abs(x - np.array([[0, 1], [1, 0]])).max() < 1e-12
    assert np.abs(z - np.diag([1, -1])).max() < 1e-12
    assert np.abs(y - np.array([[0, -1j], [1j, 0]])).max() < 1e-12


@pytest.mark.parametrize("d", [3, 5])
def test_shift_and_phase_commutation(d):
    omega = np.exp(2j * np.pi / d)
    x, z = make_shift(d), make_phase(d)
    assert np.abs(z @ x - omega * x @ z).max() < 1e-12
    assert np.abs(np.linalg.matrix_power(x, d) - np.eye(d)).max() < 1e-12


@pytest.mark.parametrize("d", [2, 3, 5])
def test_pauli_compose_matches_dense_product(d, rng):
    pd = PrimeDim(d)
    labels = pauli_labels(d)
    for l1, l2 in itertools.product(labels, repeat=2):
        p = PauliLabel.of(d, l1.a1, l1.a2, int(rng.integers(pd.phase_modulus)))
        q = PauliLabel.of(d, l2.a1, l2.a2, int(rng.integers(pd.phase_modulus)))
        dense = make_pauli(d, p) @ make_pauli(d, q)
        assert np.abs(make_pauli(d, pauli_compose(d, p, q)) - dense).max() < 1e-10


@pytest.mark.parametrize("d", [2, 3, 7])
def test_pauli_inverse(d):
    identity = PauliLabel(d, 0, 0)
    for label in pauli_labels(d):
        phased = PauliLabel.of(d, label.a1, label.a2, 1)
        assert pauli_compose(d, phased, pauli_inverse(d, phased)) == identity


def test_label_range_checked():
    with pytest.raises(ValueError):
        PauliLabel(3, 3, 0)
    with pytest.raises(ValueError):
        PauliLabel(2, 0, 0, 4)


def test_hadamard_swaps_x_and_z():
    verdict = is_clifford(2, HADAMARD)
    assert verdict.verdict is Verdict.CLIFFORD
    assert verdict.table["X"].image.point == (0, 1)
    assert verdict.table["Z"].image.point == (1, 0)
    assert verdict.table["X"].phase_exp == 0


def test_t_gate_and_identity():
    assert is_clifford(2, T_GATE).verdict is Verdict.NOT_CLIFFORD
    assert is_clifford(2, np.eye(2)).verdict is Verdict.CLIFFORD
    assert is_clifford(3, np.eye(3)).verdict is Verdict.CLIFFORD


def test_non_unitary_rejected():
    with pytest.raises(NotUnitaryError):
        is_clifford(2, np.array([[1, 0], [0, 2]]))
    with pytest.raises(DimensionError):
        is_clifford(4, np.eye(4))


def test_near_clifford_is_indeterminate():
    eps = 1.5e-3
    rotation = np.diag([np.exp(-1j * eps), np.exp(1j * eps)])
    verdict = is_clifford(2, rotation, tol=1e-3)
    assert verdict.verdict is Verdict.INDETERMINATE
    assert is_clifford(2, rotation, tol=1e-9).verdict is Verdict.NOT_CLIFFORD


@pytest.mark.parametrize("d, size", [(2, 24), (3, 216)])
def test_projective_clifford_enumeration(d, size):
    elements = clifford_enumerate_projective(d)
    assert len(elements) == size
    assert len({e.action for e in elements}) == size
    for element in elements:
        verdict = is_clifford(d, element.matrix)
        assert verdict.verdict is Verdict.CLIFFORD
        assert action_of(d, element.matrix) == element.action


def test_enumeration_limited_to_small_dims():
    with pytest.raises(DimensionError):
        clifford_enumerate_projective(5)


@pytest.mark.parametrize("d", [2, 3])
def test_actions_agree_with_dense_conjugation(d, rng):
    elements = clifford_enumerate_projective(d)
    for index in rng.choice(len(elements), size=10, replace=False):
        element = elements[int(index)]
        for label in pauli_labels(d):
            dense = element.conjugate(make_pauli(d, label))
            assert np.abs(make_pauli(d, apply_action(d, element.action, label)) - dense).max() < 1e-10
        operator = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        assert np.abs(conjugate_by_action(d, element.action, operator) - element.conjugate(operator)).max() < 1e-10


def test_fourier_gate_is_clifford():
    for d in (2, 3, 5):
        assert is_clifford(d, fourier_gate(d)).is_clifford


def test_operator_json_defaults_imaginary_part():
    matrix = operator_from_json({"re": [[1, 0], [0, 1]]})
    assert matrix.dtype == complex
    assert np.abs(matrix - np.eye(2)).max() == 0
    with pytest.raises(ValueError):
        operator_from_json({"dim": 3, "re": [[1, 0], [0, 1]]})


@pytest.mark.parametrize("d", [2, 3, 5])
def test_pauli_dth_power_is_scalar(d):
    pd = PrimeDim(d)
    for label in pauli_labels(d):
        for exp in range(pd.phase_modulus):
            power = np.linalg.matrix_power(make_pauli(d, PauliLabel(d, label.a1, label.a2, exp)), d)
            scalar = power[0, 0]
            assert abs(abs(scalar) - 1) < 1e-10
            assert operators_close(power, scalar * np.eye(d), 1e-10)


def test_global_phase_does_not_change_verdict():
    phased = np.exp(0.37j) * HADAMARD
    verdict = is_clifford(2, phased)
    assert verdict.verdict is Verdict.CLIFFORD
    assert verdict.table["X"].image.point == (0, 1)
    assert verdict.table["Z"].image.point == (1, 0)
    assert is_clifford(2, np.exp(1.1j) * T_GATE).verdict is Verdict.NOT_CLIFFORD

    for element in clifford_enumerate_projective(3)[::37]:
        rotated = np.exp(-2.05j) * element.matrix
        assert is_clifford(3, rotated).verdict is Verdict.CLIFFORD
        assert action_of(3, rotated) == element.action
