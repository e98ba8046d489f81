"""
Hamiltonian terms of a nuclear spin system, returned as H/h in MHz
"""
from typing import Dict, Optional, Sequence, Union
import math

import numpy as np

from domain.entities import (
    JCouplingMatrix, MultiSpinSystem, NuclearSpin, Pulse, PulseComponent,
    QuadrupoleParams, ZeemanParams,
)
from domain.exceptions import DimensionMismatchError, InvalidParameterError
from domain.spin import SystemLike, as_system, lift_operator, spin_operators, spin_rotation

QuadrupoleSpec = Union[None, QuadrupoleParams, Sequence[Optional[QuadrupoleParams]], Dict[int, QuadrupoleParams]]

HANDEDNESS = {
    "sigma+": 1, "+": 1, "plus": 1, "σ+": 1, "σ⁺": 1,
    "sigma-": -1, "-": -1, "minus": -1, "σ-": -1, "σ⁻": -1,
}


def h_zeeman(spin: SystemLike, p: ZeemanParams) -> np.ndarray:
    """-(gamma/2pi) B0 n.I, summed over sites with each nucleus' own gamma"""
    system = as_system(spin)
    H = np.zeros((system.total_dim, system.total_dim), dtype=complex)
    for site, nucleus in enumerate(system.spins):
        n_dot_I = spin_operators(nucleus).along(p.theta, p.phi)
        H -= nucleus.gyro_ratio_over_2pi * p.field * lift_operator(system, site, n_dot_I)
    return H


def h_quadrupole(spin: NuclearSpin, p: QuadrupoleParams) -> np.ndarray:
    """
    Quadrupole interaction c/(4I(2I-1)) (3Iz^2 - I(I+1) + eta/2 (I+^2 + I-^2)).

    Built in the EFG principal frame and rotated to the lab by the z-y-z Euler
    angles of p.efg_orientation. Zero for I = 1/2.
    """
    I = spin.quantum_number
    d = spin.dimension
    if d < 3:
        return np.zeros((d, d), dtype=complex)

    ops = spin_operators(spin)
    H = (3 * ops.Iz @ ops.Iz - I * (I + 1) * np.eye(d)
         + p.eta / 2 * (ops.Iplus @ ops.Iplus + ops.Iminus @ ops.Iminus))
    H = p.coupling / (4 * I * (2 * I - 1)) * H

    if any(p.efg_orientation):
        R = spin_rotation(spin, *p.efg_orientation)
        H = R @ H @ R.conj().T
    return (H + H.conj().T) / 2


def h_j_coupling(system: MultiSpinSystem, J: JCouplingMatrix) -> np.ndarray:
    """Sum over i<j of J_ij Iz_i Iz_j"""
    if J.size != system.count:
        raise DimensionMismatchError(
            f"J-coupling matrix is {J.size}x{J.size} but the system has {system.count} spins"
        )
    H = np.zeros((system.total_dim, system.total_dim), dtype=complex)
    iz = [lift_operator(system, k, spin_operators(s).Iz) for k, s in enumerate(system.spins)]
    for i in range(system.count):
        for j in range(i + 1, system.count):
            if J.values[i, j]:
                H += J.values[i, j] * iz[i] @ iz[j]
    return H


def _component_operator(system: MultiSpinSystem, component: PulseComponent) -> np.ndarray:
    """-(gamma/2pi) 2 B1 n.I summed over sites"""
    O = np.zeros((system.total_dim, system.total_dim), dtype=complex)
    for site, nucleus in enumerate(system.spins):
        n_dot_I = spin_operators(nucleus).along(component.axis_theta, component.axis_phi)
        O -= nucleus.gyro_ratio_over_2pi * 2 * component.amplitude * lift_operator(system, site, n_dot_I)
    return O


def h_pulse_at(spin: SystemLike, pulse: Pulse, t: float) -> np.ndarray:
    """Pulse Hamiltonian at time t (us)"""
    if t < 0:
        raise InvalidParameterError(f"Pulse time must be non-negative, got {t}")
    system = as_system(spin)
    H = np.zeros((system.total_dim, system.total_dim), dtype=complex)
    for c in pulse.components:
        H += math.cos(2 * math.pi * c.frequency * t - c.phase) * _component_operator(system, c)
    return H


def pulse_trajectory(spin: SystemLike, pulse: Pulse, times: np.ndarray) -> np.ndarray:
    """h_pulse_at sampled on `times`, shape (len(times), d, d)"""
    system = as_system(spin)
    times = np.asarray(times, dtype=float)
    trajectory = np.zeros((times.size, system.total_dim, system.total_dim), dtype=complex)
    for c in pulse.components:
        envelope = np.cos(2 * np.pi * c.frequency * times - c.phase)
        trajectory += envelope[:, None, None] * _component_operator(system, c)[None, :, :]
    return trajectory


def _direction(vector: np.ndarray):
    """(theta, phi) of a unit vector"""
    x, y, z = vector
    return math.acos(max(-1.0, min(1.0, z))), math.atan2(y, x)


def make_linear_pulse(B1: float, nu_p: float, phase: float = 0.0,
                      axis_theta: float = math.pi / 2, axis_phi: float = 0.0) -> Pulse:
    return Pulse([PulseComponent(B1, nu_p, phase, axis_theta, axis_phi)], polarization="linear")


def make_circular_pulse(handedness: str, B1: float, nu_p: float, base_phase: float = 0.0,
                        plane_normal_theta: float = 0.0, plane_normal_phi: float = 0.0) -> Pulse:
    """
    Two orthogonal linear components in the plane normal to the given axis.

    The second component lags by +pi/2 for sigma+ and by -pi/2 for sigma-; about z
    the components lie along x and y.
    """
    try:
        sign = HANDEDNESS[str(handedness).strip().lower()]
    except KeyError:
        raise InvalidParameterError(f"Unknown handedness {handedness!r}, expected sigma+ or sigma-")

    st, ct = math.sin(plane_normal_theta), math.cos(plane_normal_theta)
    sp, cp = math.sin(plane_normal_phi), math.cos(plane_normal_phi)
    e1 = np.array([ct * cp, ct * sp, -st])
    e2 = np.array([-sp, cp, 0.0])

    theta1, phi1 = _direction(e1)
    theta2, phi2 = _direction(e2)
    return Pulse(
        [
            PulseComponent(B1, nu_p, base_phase, theta1, phi1),
            PulseComponent(B1, nu_p, base_phase + sign * math.pi / 2, theta2, phi2),
        ],
        polarization="sigma+" if sign > 0 else "sigma-",
    )


def _quadrupole_for_site(quadrupoles: QuadrupoleSpec, site: int) -> Optional[QuadrupoleParams]:
    if quadrupoles is None:
        return None
    if isinstance(quadrupoles, QuadrupoleParams):
        return quadrupoles if site == 0 else None
    if isinstance(quadrupoles, dict):
        return quadrupoles.get(site)
    return quadrupoles[site] if site < len(quadrupoles) else None


def h_unperturbed(system: SystemLike, zeeman: Optional[ZeemanParams] = None,
                  quadrupoles: QuadrupoleSpec = None,
                  j_coupling: Optional[JCouplingMatrix] = None) -> np.ndarray:
    """Static Hamiltonian: Zeeman + per-site quadrupole + J-coupling"""
    system = as_system(system)
    H = np.zeros((system.total_dim, system.total_dim), dtype=complex)
    if zeeman is not None:
        H += h_zeeman(system, zeeman)
    for site, nucleus in enumerate(system.spins):
        params = _quadrupole_for_site(quadrupoles, site)
        if params is not None:
            H += lift_operator(system, site, h_quadrupole(nucleus, params))
    if j_coupling is not None and system.count > 1:
        H += h_j_coupling(system, j_coupling)
    return H
