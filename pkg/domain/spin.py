"""
Spin operator algebra for single nuclei and multi-nucleus systems
"""
from itertools import product
from typing import Iterable, List, Tuple, Union

import numpy as np

from config import settings
from domain.entities import MultiSpinSystem, NuclearSpin, SpinOperators
from domain.exceptions import DimensionMismatchError, InvalidSpinError
from domain.operators import as_matrix, matrix_exp, tensor_product

SpinLike = Union[NuclearSpin, float, str]
SystemLike = Union[MultiSpinSystem, NuclearSpin]

OPERATOR_NAMES = {
    "x": "Ix", "y": "Iy", "z": "Iz",
    "plus": "Iplus", "minus": "Iminus",
}


def _as_spin(spin: SpinLike) -> NuclearSpin:
    return spin if isinstance(spin, NuclearSpin) else NuclearSpin(spin)


def as_system(system: SystemLike) -> MultiSpinSystem:
    return system if isinstance(system, MultiSpinSystem) else MultiSpinSystem([system])


def spin_operators(I: SpinLike) -> SpinOperators:
    """
    Angular momentum matrices in the |m> basis, m = I, I-1, ..., -I.

    The first basis vector is m = +I and <m+1|I+|m> = sqrt(I(I+1) - m(m+1)).
    """
    spin = _as_spin(I)
    j = spin.quantum_number
    if j > settings.MAX_SPIN:
        raise InvalidSpinError(f"Spins above {settings.MAX_SPIN} are not supported, got {j}")

    m = spin.m_values
    Iz = np.diag(m).astype(complex)
    lower_m = m[1:]
    Iplus = np.diag(np.sqrt(j * (j + 1) - lower_m * (lower_m + 1)), k=1).astype(complex)
    Iminus = Iplus.T.copy()

    return SpinOperators(
        Ix=(Iplus + Iminus) / 2,
        Iy=(Iplus - Iminus) / 2j,
        Iz=Iz,
        Iplus=Iplus,
        Iminus=Iminus,
        Isquared=j * (j + 1) * np.eye(spin.dimension, dtype=complex),
    )


def build_system(spins: Iterable) -> MultiSpinSystem:
    """System from NuclearSpin objects, (I, gamma/2pi) pairs or bare quantum numbers"""
    built: List[NuclearSpin] = []
    for s in spins:
        if isinstance(s, NuclearSpin):
            built.append(s)
        elif isinstance(s, (tuple, list)):
            built.append(NuclearSpin(*s))
        else:
            built.append(NuclearSpin(s))
    system = MultiSpinSystem(built)
    if system.total_dim > settings.MAX_DIMENSION:
        raise DimensionMismatchError(
            f"System dimension {system.total_dim} exceeds the limit of {settings.MAX_DIMENSION}"
        )
    return system


def lift_operator(system: SystemLike, site: int, op) -> np.ndarray:
    """1 x ... x op x ... x 1 with op on `site`"""
    system = as_system(system)
    if not 0 <= site < system.count:
        raise DimensionMismatchError(f"Site {site} out of range for {system.count} spins")
    op = as_matrix(op)
    if op.shape[0] != system.dims[site]:
        raise DimensionMismatchError(
            f"Operator of dim {op.shape[0]} does not act on site {site} (dim {system.dims[site]})"
        )
    if system.count == 1:
        return op
    factors = [np.eye(d, dtype=complex) for d in system.dims]
    factors[site] = op
    return tensor_product(*factors)


def site_operator(system: SystemLike, site: int, name: str) -> np.ndarray:
    """A named single-spin operator ('x', 'y', 'z', 'plus', 'minus') lifted to the system"""
    system = as_system(system)
    ops = spin_operators(system.spins[site])
    return lift_operator(system, site, getattr(ops, OPERATOR_NAMES[name]))


def total_operator(system: SystemLike, name: str) -> np.ndarray:
    """Sum over sites of a named single-spin operator"""
    system = as_system(system)
    return sum(site_operator(system, k, name) for k in range(system.count))


def spin_rotation(system: SystemLike, alpha: float, beta: float, gamma: float) -> np.ndarray:
    """z-y-z Euler rotation exp(-i alpha Iz) exp(-i beta Iy) exp(-i gamma Iz) on the total spin"""
    Iz = total_operator(system, "z")
    Iy = total_operator(system, "y")
    return matrix_exp(-1j * alpha * Iz) @ matrix_exp(-1j * beta * Iy) @ matrix_exp(-1j * gamma * Iz)


def basis_labels(system: SystemLike) -> List[Tuple[float, ...]]:
    """m values of every basis vector, first spin slowest"""
    system = as_system(system)
    return [tuple(float(m) for m in ms) for ms in product(*(s.m_values for s in system.spins))]
