"""
Thermal state preparation and density-matrix evolution.

Pulses are integrated in an interaction picture with the Magnus expansion up
to third order; between pulses the state evolves freely under H0. Hamiltonians
are H/h in MHz and times are in microseconds, so every propagator carries the
phase factor -i 2 pi.
"""
from dataclasses import replace
from typing import Callable, Optional, Sequence, Tuple, Union
import logging
import math

import numpy as np
from scipy import linalg
from scipy.integrate import cumulative_simpson, simpson

from config import constants, settings, tolerances
from domain.entities import (
    EvolutionSettings, JCouplingMatrix, MultiSpinSystem, Pulse, QubitBasisMap,
    ThermalParams, ZeemanParams,
)
from domain.exceptions import (
    DimensionMismatchError, HighTemperatureApproximationError, InvalidParameterError,
    QuadratureError, UnitarityError,
)
from domain.hamiltonians import QuadrupoleSpec, h_unperturbed, pulse_trajectory
from domain.operators import (
    as_matrix, check_density_matrix, commutator, is_hermitian, matrix_exp, unitarity_defect,
)
from domain.spin import SystemLike, as_system, build_system, total_operator

logger = logging.getLogger(__name__)

TWO_PI_I = 2j * math.pi

InitialState = Union[str, np.ndarray, Sequence[float]]


# ---------------------------------------------------------------------------
# Initial state
# ---------------------------------------------------------------------------

def canonical_density_matrix(H0, p: Optional[ThermalParams] = None) -> np.ndarray:
    """
    Thermal equilibrium state of H0 (MHz) at p.temperature.

    exact_boltzmann uses exp(-h H0 / k_B T) / Z; high_T_linearized uses
    (1 - h H0 / k_B T) / Z and refuses temperatures where that is not positive.
    """
    p = p or ThermalParams(temperature=settings.DEFAULT_TEMPERATURE)
    H = as_matrix(H0)
    if not is_hermitian(H):
        raise InvalidParameterError("canonical_density_matrix needs a Hermitian H0")
    d = H.shape[0]
    if not np.any(H):
        return np.eye(d, dtype=complex) / d

    beta = constants.MHZ_TO_KELVIN / p.temperature  # per MHz

    if p.mode == "high_T_linearized":
        rho = np.eye(d, dtype=complex) - beta * H
        smallest = float(np.min(linalg.eigvalsh(rho)))
        if smallest < 0:
            raise HighTemperatureApproximationError(
                f"High-temperature approximation invalid at T = {p.temperature} K "
                f"(1 - hH0/kT has eigenvalue {smallest:.3e}); use exact_boltzmann"
            )
        return rho / np.trace(rho).real

    energies, vectors = linalg.eigh(H)
    weights = np.exp(-beta * (energies - energies.min()))
    rho = (vectors * (weights / weights.sum())) @ vectors.conj().T
    return (rho + rho.conj().T) / 2


def nuclear_system_setup(spins, zeeman: Optional[ZeemanParams] = None,
                         quadrupoles: QuadrupoleSpec = None,
                         j_coupling: Optional[JCouplingMatrix] = None,
                         initial_state: InitialState = "canonical",
                         temperature: float = settings.DEFAULT_TEMPERATURE,
                         ) -> Tuple[MultiSpinSystem, np.ndarray, np.ndarray]:
    """
    Build (system, H0, rho0).

    initial_state is 'canonical', 'high_T', 'pure:<label>' with a computational
    basis label such as '10', a list of populations or an explicit matrix.
    """
    system = spins if isinstance(spins, MultiSpinSystem) else build_system(spins)
    H0 = h_unperturbed(system, zeeman, quadrupoles, j_coupling)
    d = system.total_dim

    if isinstance(initial_state, str):
        kind = initial_state.strip()
        if kind == "canonical":
            rho0 = canonical_density_matrix(H0, ThermalParams(temperature, "exact_boltzmann"))
        elif kind == "high_T":
            rho0 = canonical_density_matrix(H0, ThermalParams(temperature, "high_T_linearized"))
        elif kind.startswith("pure:"):
            index = QubitBasisMap.for_dimension(d).index(kind.split(":", 1)[1].strip())
            rho0 = np.zeros((d, d), dtype=complex)
            rho0[index, index] = 1.0
        else:
            raise InvalidParameterError(f"Unknown initial state {initial_state!r}")
    else:
        values = np.asarray(initial_state, dtype=complex)
        if values.ndim == 1:
            if values.size != d:
                raise DimensionMismatchError(f"{values.size} populations given for a {d}-level system")
            values = np.diag(values)
        if values.shape != (d, d):
            raise DimensionMismatchError(f"Initial state of shape {values.shape} for a {d}-level system")
        rho0 = values

    return system, H0, check_density_matrix(rho0, "initial state")


# ---------------------------------------------------------------------------
# Pictures
# ---------------------------------------------------------------------------

def to_interaction_picture(H1_at: Callable[[float], np.ndarray], H0, t: float) -> np.ndarray:
    """exp(+i 2pi H0 t) H1(t) exp(-i 2pi H0 t)"""
    H1 = as_matrix(H1_at(t))
    U = matrix_exp(-TWO_PI_I * as_matrix(H0) * t)
    H = U.conj().T @ H1 @ U
    return (H + H.conj().T) / 2


def _rotate_trajectory(frame, trajectory: np.ndarray, times: np.ndarray) -> np.ndarray:
    """to_interaction_picture at every grid time, done once in the eigenbasis of the frame"""
    energies, V = linalg.eigh(as_matrix(frame))
    in_basis = V.conj().T @ trajectory @ V
    gaps = energies[:, None] - energies[None, :]
    phases = np.exp(TWO_PI_I * times[:, None, None] * gaps[None, :, :])
    return V @ (in_basis * phases) @ V.conj().T


def _spread(H: np.ndarray) -> float:
    energies = linalg.eigvalsh(H)
    return float(energies[-1] - energies[0])


def _rrf_frame(system: MultiSpinSystem, s: EvolutionSettings) -> np.ndarray:
    """-nu_RRF n.I on the total spin"""
    st, ct = math.sin(s.rrf_theta), math.cos(s.rrf_theta)
    n_dot_I = (st * math.cos(s.rrf_phi) * total_operator(system, "x")
               + st * math.sin(s.rrf_phi) * total_operator(system, "y")
               + ct * total_operator(system, "z"))
    return -s.rrf_frequency * n_dot_I


# ---------------------------------------------------------------------------
# Magnus expansion
# ---------------------------------------------------------------------------

def _grid(H_tilde: np.ndarray, t_P: float) -> np.ndarray:
    if H_tilde.ndim != 3 or H_tilde.shape[1] != H_tilde.shape[2]:
        raise DimensionMismatchError(f"Expected a (samples, d, d) trajectory, got {H_tilde.shape}")
    if H_tilde.shape[0] < 3:
        raise QuadratureError(f"Composite quadrature needs at least 3 samples, got {H_tilde.shape[0]}")
    return np.linspace(0.0, t_P, H_tilde.shape[0])


def _integrate(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    return simpson(y.real, x=x, axis=0) + 1j * simpson(y.imag, x=x, axis=0)


def _cumulative(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    return (cumulative_simpson(y.real, x=x, axis=0, initial=0)
            + 1j * cumulative_simpson(y.imag, x=x, axis=0, initial=0))


def _bracket(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A


def _second_order_integrand(A: np.ndarray, K: np.ndarray) -> np.ndarray:
    return 0.5 * _bracket(A, K)


def _third_order_integrand(A: np.ndarray, K: np.ndarray, omega_2: np.ndarray) -> np.ndarray:
    # d(Omega_3)/dt = 1/2 [A, Omega_2] + 1/12 [K, [K, A]], K = Omega_1(t)
    return 0.5 * _bracket(A, omega_2) + _bracket(K, _bracket(K, A)) / 12


def magnus_term_1(H_tilde: np.ndarray, t_P: float) -> np.ndarray:
    """-i 2pi times the integral of H_tilde over [0, t_P]"""
    times = _grid(H_tilde, t_P)
    return _integrate(-TWO_PI_I * H_tilde, times)


def magnus_term_2(H_tilde: np.ndarray, t_P: float) -> np.ndarray:
    """1/2 of the ordered double integral of [A(t1), A(t2)], A = -i 2pi H_tilde"""
    times = _grid(H_tilde, t_P)
    A = -TWO_PI_I * H_tilde
    K = _cumulative(A, times)
    return _integrate(_second_order_integrand(A, K), times)


def magnus_term_3(H_tilde: np.ndarray, t_P: float) -> np.ndarray:
    """
    Third Magnus term, 1/6 of the ordered triple integral of
    [A1, [A2, A3]] + [A3, [A2, A1]].

    Evaluated as the integral of its time derivative, which only needs the
    running first- and second-order terms.
    """
    times = _grid(H_tilde, t_P)
    A = -TWO_PI_I * H_tilde
    K = _cumulative(A, times)
    omega_2 = _cumulative(_second_order_integrand(A, K), times)
    return _integrate(_third_order_integrand(A, K, omega_2), times)


def magnus_generator_history(H_tilde: np.ndarray, t_P: float, order: int = 2) -> np.ndarray:
    """Omega(t, 0) summed up to `order` at every grid time, shape (samples, d, d)"""
    if order not in (1, 2, 3):
        raise InvalidParameterError(f"Magnus order must be 1, 2 or 3, got {order}")
    times = _grid(H_tilde, t_P)
    A = -TWO_PI_I * H_tilde
    K = _cumulative(A, times)
    omega = K.copy()
    if order >= 2:
        omega_2 = _cumulative(_second_order_integrand(A, K), times)
        omega += omega_2
        if order == 3:
            omega += _cumulative(_third_order_integrand(A, K, omega_2), times)
    return omega


MAGNUS_TERMS = (magnus_term_1, magnus_term_2, magnus_term_3)


# ---------------------------------------------------------------------------
# Propagators
# ---------------------------------------------------------------------------

def quadrature_times(t_P: float, frequency: float, points_per_period: int) -> np.ndarray:
    """Uniform grid on [0, t_P] with an even number of intervals"""
    intervals = math.ceil(points_per_period * max(frequency * t_P, 1.0))
    intervals += intervals % 2
    return np.linspace(0.0, t_P, intervals + 1)


def interaction_trajectory(system: MultiSpinSystem, H0: np.ndarray, pulse: Optional[Pulse],
                          t_P: float, s: EvolutionSettings):
    """Frame operator F and H_tilde sampled on the quadrature grid"""
    if s.picture == "rotating_frame":
        frame = _rrf_frame(system, s)
        residual = H0 - frame
    else:
        frame = H0
        residual = np.zeros_like(H0)

    frequency = max(_spread(H0), _spread(frame), pulse.max_frequency if pulse else 0.0)
    times = quadrature_times(t_P, frequency, s.quadrature_points_per_period)

    trajectory = np.broadcast_to(residual, (times.size,) + residual.shape).copy()
    if pulse is not None:
        trajectory += pulse_trajectory(system, pulse, times)
    H_tilde = _rotate_trajectory(frame, trajectory, times)

    logger.debug("Magnus grid: %d samples over %.6g us (f = %.6g MHz, order %d, picture %s)",
                 times.size, t_P, frequency, s.magnus_order, s.picture)
    return frame, times, H_tilde


def pulse_propagator(system: SystemLike, H0, pulse: Optional[Pulse], t_P: float,
                     s: Optional[EvolutionSettings] = None) -> np.ndarray:
    """
    Lab-frame propagator of H0 + H1(t) over [0, t_P].

    U = exp(-i 2pi F t_P) exp(Omega_1 + ... + Omega_order), F being H0 in the
    interaction picture or -nu_RRF n.I in the rotating frame.
    """
    system = as_system(system)
    s = s or EvolutionSettings()
    H0 = as_matrix(H0)
    if H0.shape[0] != system.total_dim:
        raise DimensionMismatchError(f"H0 of dim {H0.shape[0]} for a system of dim {system.total_dim}")
    if t_P < 0:
        raise InvalidParameterError(f"Pulse duration must be non-negative, got {t_P}")
    if t_P == 0:
        return np.eye(system.total_dim, dtype=complex)

    frame, omega = _magnus_exponent(system, H0, pulse, t_P, s)
    finer = replace(s, quadrature_points_per_period=2 * s.quadrature_points_per_period)
    defect = float(np.max(np.abs(omega - _magnus_exponent(system, H0, pulse, t_P, finer)[1])))
    if defect > tolerances.MAGNUS_CONVERGENCE:
        logger.warning(
            "Magnus exponent changes by %.3e when the quadrature is doubled; "
            "increase quadrature_points_per_period (now %d)",
            defect, s.quadrature_points_per_period,
        )
    return matrix_exp(-TWO_PI_I * frame * t_P) @ matrix_exp(omega)


def _magnus_exponent(system: MultiSpinSystem, H0: np.ndarray, pulse: Optional[Pulse], t_P: float,
                     s: EvolutionSettings) -> Tuple[np.ndarray, np.ndarray]:
    frame, _, H_tilde = interaction_trajectory(system, H0, pulse, t_P, s)
    return frame, sum(term(H_tilde, t_P) for term in MAGNUS_TERMS[:s.magnus_order])


def free_evolve(H0, rho, t: float) -> np.ndarray:
    """exp(-i 2pi H0 t) rho exp(+i 2pi H0 t)"""
    if t < 0:
        raise InvalidParameterError(f"Evolution time must be non-negative, got {t}")
    R = as_matrix(rho)
    if t == 0:
        return R
    U = matrix_exp(-TWO_PI_I * as_matrix(H0) * t)
    out = U @ R @ U.conj().T
    return (out + out.conj().T) / 2


def evolve(system: SystemLike, H0, rho0, pulse: Optional[Pulse], t_P: float,
           s: Optional[EvolutionSettings] = None) -> np.ndarray:
    """State after a pulse of duration t_P (or free evolution when pulse is None)"""
    R = as_matrix(rho0)
    H = as_matrix(H0)
    if R.shape != H.shape:
        raise DimensionMismatchError(f"rho0 {R.shape} and H0 {H.shape} differ in dimension")
    if t_P < 0:
        raise InvalidParameterError(f"Pulse duration must be non-negative, got {t_P}")
    if t_P == 0:
        return R
    if pulse is None:
        if np.max(np.abs(commutator(R, H))) <= tolerances.HERMITIAN:
            return R
        return free_evolve(H, R, t_P)

    U = pulse_propagator(system, H, pulse, t_P, s)
    defect = unitarity_defect(U)
    if defect > tolerances.PROPAGATOR_GATE:
        raise UnitarityError(
            f"Propagator deviates from unitarity by {defect:.3e}; "
            "increase quadrature_points_per_period"
        )
    out = U @ R @ U.conj().T
    return (out + out.conj().T) / 2
