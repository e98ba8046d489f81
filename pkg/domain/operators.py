"""
Dense complex linear algebra shared by every other module

Matrices are plain complex numpy arrays; nothing here mutates its inputs.
"""
from functools import reduce
from typing import List, Optional, Sequence
import logging

import numpy as np
from scipy import linalg

from config import tolerances
from domain.exceptions import DimensionMismatchError, InvalidParameterError

logger = logging.getLogger(__name__)


def as_matrix(M) -> np.ndarray:
    """Complex 2-D square copy of M"""
    A = np.array(M, dtype=complex, ndmin=2)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise DimensionMismatchError(f"Expected a square matrix, got shape {A.shape}")
    return A


def _require_same_dim(A: np.ndarray, B: np.ndarray, what: str):
    if A.shape != B.shape:
        raise DimensionMismatchError(f"{what}: incompatible operands {A.shape} and {B.shape}")


def adjoint(M) -> np.ndarray:
    return as_matrix(M).conj().T


def commutator(A, B) -> np.ndarray:
    A, B = as_matrix(A), as_matrix(B)
    _require_same_dim(A, B, "commutator")
    return A @ B - B @ A


def is_hermitian(M, tol: float = tolerances.HERMITIAN) -> bool:
    A = as_matrix(M)
    return bool(np.max(np.abs(A - A.conj().T)) <= tol)


def is_unitary(U, tol: float = tolerances.UNITARY) -> bool:
    A = as_matrix(U)
    return bool(np.max(np.abs(A.conj().T @ A - np.eye(A.shape[0]))) <= tol)


def unitarity_defect(U) -> float:
    """max |U^dagger U - 1| entrywise"""
    A = as_matrix(U)
    return float(np.max(np.abs(A.conj().T @ A - np.eye(A.shape[0]))))


def matrix_exp(M) -> np.ndarray:
    """
    exp(M) by eigendecomposition for Hermitian and anti-Hermitian M.

    Diagonal inputs are exponentiated entrywise; any other matrix goes through
    scipy's Pade approximant. Eigenvector choice inside degenerate eigenspaces is
    arbitrary and does not affect the result.
    """
    A = as_matrix(M)
    if not np.any(A - np.diag(np.diag(A))):
        return np.diag(np.exp(np.diag(A)))

    scale = max(1.0, float(np.max(np.abs(A))))
    if np.max(np.abs(A + A.conj().T)) <= tolerances.HERMITIAN * scale:
        # A = -i H with H = iA Hermitian
        values, vectors = linalg.eigh(1j * A)
        return (vectors * np.exp(-1j * values)) @ vectors.conj().T
    if np.max(np.abs(A - A.conj().T)) <= tolerances.HERMITIAN * scale:
        values, vectors = linalg.eigh(A)
        return (vectors * np.exp(values)) @ vectors.conj().T

    logger.debug("matrix_exp: non-normal generator of dim %d, using Pade", A.shape[0])
    return linalg.expm(A)


def tensor_product(*factors) -> np.ndarray:
    """Kronecker product; the first factor is the slow index"""
    if not factors:
        raise DimensionMismatchError("tensor_product needs at least one factor")
    return reduce(np.kron, [as_matrix(f) for f in factors])


def partial_trace(M, subsystem_dims: Sequence[int], traced_index: int) -> np.ndarray:
    """Trace out subsystem `traced_index` of a matrix on the product space"""
    A = as_matrix(M)
    dims = [int(d) for d in subsystem_dims]
    if any(d < 1 for d in dims) or int(np.prod(dims)) != A.shape[0]:
        raise DimensionMismatchError(
            f"Subsystem dims {dims} do not multiply to the matrix dimension {A.shape[0]}"
        )
    n = len(dims)
    if not 0 <= traced_index < n:
        raise DimensionMismatchError(f"traced_index {traced_index} out of range for {n} subsystems")

    reduced = np.trace(A.reshape(dims + dims), axis1=traced_index, axis2=traced_index + n)
    kept = int(np.prod([d for i, d in enumerate(dims) if i != traced_index]))
    return reduced.reshape(kept, kept)


def expectation(rho, O) -> complex:
    """Tr(rho O)"""
    R, A = as_matrix(rho), as_matrix(O)
    _require_same_dim(R, A, "expectation")
    return complex(np.einsum("ij,ji->", R, A))


def check_density_matrix(rho, what: str = "density matrix") -> np.ndarray:
    """Return rho if it is Hermitian, unit-trace and positive; raise otherwise"""
    R = as_matrix(rho)
    problems = []
    if not is_hermitian(R):
        problems.append("not Hermitian")
    if abs(np.trace(R) - 1) > tolerances.TRACE:
        problems.append(f"trace {np.trace(R).real:.12g} != 1")
    if not problems:
        smallest = float(np.min(linalg.eigvalsh(R)))
        if smallest < -tolerances.POSITIVITY:
            problems.append(f"negative eigenvalue {smallest:.3e}")
    if problems:
        raise InvalidParameterError(f"Invalid {what}: " + ", ".join(problems))
    return R


def random_hermitian(dim: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    rng = rng or np.random.default_rng()
    G = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (G + G.conj().T) / 2


def random_density_matrix(dim: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Full-rank positive unit-trace matrix G G^dagger / Tr"""
    rng = rng or np.random.default_rng()
    G = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def format_matrix(M) -> str:
    """Debug dump: row-major grid of re+im i entries, 12 significant digits"""
    A = as_matrix(M)
    rows: List[str] = []
    for row in A:
        rows.append(" ".join(f"{z.real + 0.0:.12g}{z.imag + 0.0:+.12g}i" for z in row))
    return "\n".join(rows)
