"""
Tests for the dense linear algebra helpers
"""
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy import linalg

sys.path.insert(0, str(Path(__file__).parent))

from domain.exceptions import DimensionMismatchError, InvalidParameterError
from domain.operators import (
    adjoint, as_matrix, check_density_matrix, commutator, expectation, format_matrix,
    is_hermitian, is_unitary, matrix_exp, partial_trace, random_density_matrix,
    random_hermitian, tensor_product, unitarity_defect,
)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.diag([1, -1]).astype(complex)


def test_as_matrix_rejects_non_square():
    """Test that rectangular input is refused"""
    with pytest.raises(DimensionMismatchError):
        as_matrix([[1, 2, 3], [4, 5, 6]])


def test_adjoint_and_commutator():
    """Test conjugate transpose and the Pauli commutator [X, Y] = 2iZ"""
    A = np.array([[1 + 1j, 2 - 1j], [3, 4 + 2j]])
    np.testing.assert_array_equal(adjoint(A), np.array([[1 - 1j, 3], [2 + 1j, 4 - 2j]]))
    np.testing.assert_allclose(commutator(SIGMA_X, SIGMA_Y), 2j * SIGMA_Z, atol=1e-15)

    with pytest.raises(DimensionMismatchError):
        commutator(SIGMA_X, np.eye(3))


def test_matrix_exp_pi_sigma_x_is_minus_identity():
    """Test exp(-i pi X) = -1"""
    np.testing.assert_allclose(matrix_exp(-1j * np.pi * SIGMA_X), -np.eye(2), atol=1e-12)


def test_matrix_exp_diagonal_matches_scalar_exp():
    """Test the diagonal shortcut against the scalar exponential"""
    values = np.array([0.3, -1.2 + 0.5j, 2.0j, -4.0])
    result = matrix_exp(np.diag(values))
    np.testing.assert_allclose(np.diag(result), np.exp(values), rtol=1e-12)
    assert np.count_nonzero(result - np.diag(np.diag(result))) == 0


@pytest.mark.parametrize("dim", [2, 3, 4, 8])
def test_matrix_exp_of_hermitian_generator_is_unitary(dim):
    """Test unitarity of exp(-i t H) for random Hermitian H"""
    rng = np.random.default_rng(dim)
    for t in (0.1, 1.0, 37.5):
        U = matrix_exp(-1j * t * random_hermitian(dim, rng))
        assert unitarity_defect(U) <= 1e-8, f"dim {dim}, t {t}: defect {unitarity_defect(U)}"
        assert is_unitary(U)


def test_matrix_exp_general_matrix_matches_pade():
    """Test that non-normal input agrees with scipy's expm"""
    rng = np.random.default_rng(7)
    M = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    np.testing.assert_allclose(matrix_exp(M), linalg.expm(M), rtol=1e-10, atol=1e-12)


def test_matrix_exp_hermitian_matches_pade():
    """Test the eigendecomposition path of a Hermitian exponent"""
    rng = np.random.default_rng(11)
    H = random_hermitian(5, rng)
    np.testing.assert_allclose(matrix_exp(H), linalg.expm(H), rtol=1e-9, atol=1e-10)


def test_tensor_product_order_and_dimension():
    """Test that the first factor is the slow index"""
    A = np.diag([1.0, 2.0])
    B = np.eye(3)
    P = tensor_product(A, B)
    assert P.shape == (6, 6)
    np.testing.assert_array_equal(np.diag(P).real, [1, 1, 1, 2, 2, 2])

    with pytest.raises(DimensionMismatchError):
        tensor_product()


def test_tensor_product_is_associative():
    """Test (A x B) x C = A x (B x C) entry by entry"""
    rng = np.random.default_rng(8)
    A, B, C = (rng.integers(-5, 6, (d, d)) + 1j * rng.integers(-5, 6, (d, d)) for d in (2, 3, 2))
    left = tensor_product(tensor_product(A, B), C)
    right = tensor_product(A, tensor_product(B, C))
    np.testing.assert_array_equal(left, right)
    np.testing.assert_array_equal(tensor_product(A, B, C), left)


def test_partial_trace_of_product_state():
    """Test Tr_B(A x B) = A Tr(B) for either subsystem"""
    rng = np.random.default_rng(3)
    A = random_density_matrix(2, rng)
    B = random_density_matrix(3, rng)
    AB = tensor_product(A, B)
    np.testing.assert_allclose(partial_trace(AB, [2, 3], 1), A, atol=1e-12)
    np.testing.assert_allclose(partial_trace(AB, [2, 3], 0), B, atol=1e-12)


def test_partial_trace_rejects_bad_dims():
    """Test dimension checks of partial_trace"""
    with pytest.raises(DimensionMismatchError):
        partial_trace(np.eye(6), [2, 2], 0)
    with pytest.raises(DimensionMismatchError):
        partial_trace(np.eye(4), [2, 2], 2)


def test_expectation_is_real_for_hermitian_observable():
    """Test Tr(rho O) for a Hermitian O"""
    rng = np.random.default_rng(5)
    rho = random_density_matrix(4, rng)
    O = random_hermitian(4, rng)
    value = expectation(rho, O)
    assert abs(value.imag) <= 1e-10
    assert value.real == pytest.approx(np.trace(rho @ O).real, rel=1e-12)


def test_check_density_matrix():
    """Test the Hermitian, unit-trace and positivity checks"""
    rng = np.random.default_rng(9)
    rho = random_density_matrix(3, rng)
    assert is_hermitian(rho)
    np.testing.assert_array_equal(check_density_matrix(rho), rho)

    with pytest.raises(InvalidParameterError, match="not Hermitian"):
        check_density_matrix(np.array([[0.5, 0.1], [0.2, 0.5]]))
    with pytest.raises(InvalidParameterError, match="trace"):
        check_density_matrix(np.eye(2))
    with pytest.raises(InvalidParameterError, match="negative eigenvalue"):
        check_density_matrix(np.diag([1.2, -0.2]))


def test_format_matrix():
    """Test the row-major debug dump"""
    assert format_matrix(np.eye(2)) == "1+0i 0+0i\n0+0i 1+0i"
    assert format_matrix([[0.5 - 0.25j]]) == "0.5-0.25i"
