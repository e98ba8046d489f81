"""
Experiment recipes: pulse calibration, population exchange, pseudopure state
preparation by temporal averaging, and CNOT gates on NQR and NMR qubits.
"""
from typing import Dict, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy import linalg

from config import protocol_defaults, tolerances
from domain.entities import (
    EvolutionSettings, MultiSpinSystem, NuclearSpin, Pulse, PulseSequenceStep,
    QubitBasisMap, StepRecord, ThermalParams, parse_half_integer,
)
from domain.evolution import (
    canonical_density_matrix, evolve, free_evolve, interaction_trajectory,
    magnus_generator_history,
)
from domain.exceptions import InvalidParameterError, SelectivityError
from domain.hamiltonians import make_circular_pulse, make_linear_pulse
from domain.operators import as_matrix, matrix_exp
from domain.spin import SystemLike, as_system, site_operator

logger = logging.getLogger(__name__)

# (single-photon pair, two-photon pair) in m values, per target label
PSEUDOPURE_RECIPES: Dict[str, Tuple[Tuple[float, float], Tuple[float, float]]] = {
    "00": ((-0.5, -1.5), (0.5, -1.5)),
    "01": ((-0.5, -1.5), (1.5, -0.5)),
    "10": ((0.5, 1.5), (0.5, -1.5)),
    "11": ((0.5, 1.5), (1.5, -0.5)),
}


# ---------------------------------------------------------------------------
# Pulse calibration
# ---------------------------------------------------------------------------

def rotation_factor_alpha(I, m) -> float:
    """sqrt(I(I+1) - m(m+1)), the |m> <-> |m+1> matrix element of I+"""
    I = parse_half_integer(I)
    m = float(m)
    if (I - m) % 1 or not -I <= m <= I - 1:
        raise InvalidParameterError(f"m = {m} is not a lower level of a transition of spin {I}")
    return math.sqrt(I * (I + 1) - m * (m + 1))


def pulse_duration_for_angle(gyro_ratio_over_2pi: float, B1: float, alpha: float,
                             angle: float) -> float:
    """t_P (us) with 2pi (gamma/2pi) alpha B1 t_P = angle"""
    if B1 <= 0 or alpha <= 0:
        raise InvalidParameterError(f"B1 and alpha must be positive, got B1={B1}, alpha={alpha}")
    if gyro_ratio_over_2pi == 0:
        raise InvalidParameterError("A pulse cannot rotate a nucleus with zero gyromagnetic ratio")
    if angle <= 0:
        raise InvalidParameterError(f"Rotation angle must be positive, got {angle}")
    return angle / (2 * math.pi * abs(gyro_ratio_over_2pi) * alpha * B1)


def effective_amplitude(pulse: Pulse) -> float:
    """Co-rotating field amplitude: B1 for linear pulses, 2 B1 for circular ones"""
    if pulse.polarization == "linear":
        return max(c.amplitude for c in pulse.components)
    return sum(c.amplitude for c in pulse.components)


def calibrated_pulse_duration(spin: NuclearSpin, m: float, pulse: Pulse, angle: float) -> float:
    """Duration of an `angle` rotation on the |m> <-> |m+1> transition"""
    alpha = rotation_factor_alpha(spin.quantum_number, m)
    return pulse_duration_for_angle(spin.gyro_ratio_over_2pi, effective_amplitude(pulse), alpha, angle)


# ---------------------------------------------------------------------------
# Sequences
# ---------------------------------------------------------------------------

def _describe(step: PulseSequenceStep) -> str:
    if step.label:
        return step.label
    if step.kind == "pulse":
        freqs = ", ".join(f"{c.frequency:.6g}" for c in step.pulse.components)
        return f"{step.pulse.polarization} pulse at {freqs} MHz"
    if step.kind == "rotation":
        return f"rotation {step.angle:.6g} rad about {step.axis} on spin {step.site}"
    return "free evolution"


def run_sequence(system: SystemLike, H0, rho0, steps: Sequence[PulseSequenceStep],
                 s: Optional[EvolutionSettings] = None,
                 records: Optional[List[StepRecord]] = None) -> np.ndarray:
    """
    Apply the steps in order.

    Pulses share one carrier clock: a pulse starting after an elapsed time t_s
    is applied with its phases shifted by -2pi nu t_s. Rotation steps are
    instantaneous and do not advance the clock.
    """
    system = as_system(system)
    rho = as_matrix(rho0)
    elapsed = 0.0
    for k, step in enumerate(steps):
        if step.kind == "pulse":
            rho = evolve(system, H0, rho, step.pulse.delayed(elapsed), step.duration, s)
            elapsed += step.duration
        elif step.kind == "free_evolution":
            rho = free_evolve(H0, rho, step.duration)
            elapsed += step.duration
        else:
            U = matrix_exp(-1j * step.angle * site_operator(system, step.site, step.axis))
            rho = U @ rho @ U.conj().T

        logger.debug("step %d: %s (%.6g us)", k, _describe(step), step.duration)
        if records is not None:
            records.append(StepRecord(len(records), step.kind, _describe(step), step.duration))
    return rho


# ---------------------------------------------------------------------------
# Computational basis
# ---------------------------------------------------------------------------

def basis_state(system: SystemLike, label: str) -> np.ndarray:
    system = as_system(system)
    ket = np.zeros(system.total_dim, dtype=complex)
    ket[QubitBasisMap.for_dimension(system.total_dim).index(label)] = 1.0
    return ket


def basis_fidelity(rho, system: SystemLike, label: str) -> float:
    """<label| rho |label>"""
    ket = basis_state(system, label)
    return float(np.real(ket.conj() @ as_matrix(rho) @ ket))


def pseudopure_decomposition(rho) -> Tuple[float, float, np.ndarray, float]:
    """
    rho ~ a 1 + b |psi><psi|.

    a is the mean of the d-1 mutually closest eigenvalues and |psi> the
    eigenvector of the remaining one. Returns (a, b, psi, residual) with the
    residual the largest entry of rho - a 1 - b |psi><psi|.
    """
    R = as_matrix(rho)
    values, vectors = linalg.eigh(R)
    if values.size < 2:
        return 0.0, float(values[0]), vectors[:, 0], 0.0
    # the closest d-1 eigenvalues are contiguous in sorted order
    if np.ptp(values[1:]) <= np.ptp(values[:-1]):
        odd, cluster = 0, values[1:]
    else:
        odd, cluster = values.size - 1, values[:-1]
    a = float(np.mean(cluster))
    b = float(values[odd] - a)
    psi = vectors[:, odd]
    residual = R - a * np.eye(R.shape[0]) - b * np.outer(psi, psi.conj())
    return a, b, psi, float(np.max(np.abs(residual)))


# ---------------------------------------------------------------------------
# Population exchange on a quadrupolar spin
# ---------------------------------------------------------------------------

def _single_spin(system: SystemLike) -> NuclearSpin:
    system = as_system(system)
    if system.count != 1:
        raise InvalidParameterError("Population exchange protocols act on a single nucleus")
    return system.spins[0]


def _level_index(spin: NuclearSpin, m: float) -> int:
    index = spin.quantum_number - float(m)
    if index % 1 or not 0 <= index < spin.dimension:
        raise InvalidParameterError(f"m = {m} is not a level of spin {spin.quantum_number}")
    return int(index)


def calibrate_exchange_duration(system: SystemLike, H0, pulse: Pulse, pair: Tuple[int, int],
                                t_max: float, s: Optional[EvolutionSettings] = None,
                                candidates: int = protocol_defaults.SCAN_CANDIDATES,
                                ) -> Tuple[float, float]:
    """
    Duration in (0, t_max] maximizing |<j|U(t)|i>|^2 for the basis pair (i, j).

    One Magnus history is integrated over [0, t_max]; at most `candidates`
    evenly spaced grid times are exponentiated. Returns (duration, probability).
    """
    system = as_system(system)
    s = s or EvolutionSettings()
    H0 = as_matrix(H0)
    i, j = pair
    frame, times, H_tilde = interaction_trajectory(system, H0, pulse, t_max, s)
    history = magnus_generator_history(H_tilde, t_max, s.magnus_order)

    last = times.size - 1
    indices = np.unique(np.linspace(1, last, min(last, candidates)).round().astype(int))
    energies, V = linalg.eigh(frame)

    best_t, best_p = float(times[-1]), -1.0
    for k in indices:
        t = float(times[k])
        back = (V * np.exp(-2j * np.pi * energies * t)) @ V.conj().T
        U = back @ matrix_exp(history[k])
        p = float(abs(U[j, i]) ** 2)
        if p > best_p:
            best_t, best_p = t, p

    logger.info("Exchange %d<->%d calibrated at %.6g us (probability %.6f)", i, j, best_t, best_p)
    return best_t, best_p


def exchange_pulse(system: SystemLike, H0, pair: Tuple[float, float],
                   amplitude: Optional[float] = None) -> Tuple[Pulse, Dict[str, float]]:
    """
    Circular pulse exchanging the populations of the m levels in `pair`.

    |dm| = 1 is driven at the transition frequency, |dm| = 2 as a two-photon
    process at half of it. The handedness follows the sign of
    E(larger m) - E(smaller m).
    """
    spin = _single_spin(system)
    H = as_matrix(H0)
    m_hi, m_lo = max(pair), min(pair)
    hi, lo = _level_index(spin, m_hi), _level_index(spin, m_lo)
    photons = int(round(m_hi - m_lo))
    if photons not in (1, 2):
        raise InvalidParameterError(f"Only one- and two-photon exchanges are supported, got dm = {photons}")

    if abs(H[hi, lo]) > tolerances.HERMITIAN:
        logger.warning("H0 couples m=%s and m=%s directly; exchange calibration is approximate", m_hi, m_lo)
    gap = float(np.real(H[hi, hi] - H[lo, lo]))
    if gap == 0:
        raise SelectivityError(f"Levels m={m_hi} and m={m_lo} are degenerate")

    handedness = "sigma+" if gap > 0 else "sigma-"
    if amplitude is None:
        amplitude = (protocol_defaults.SINGLE_PHOTON_AMPLITUDE if photons == 1
                     else protocol_defaults.TWO_PHOTON_AMPLITUDE)
    pulse = make_circular_pulse(handedness, amplitude, abs(gap) / photons)
    return pulse, {"levels": (hi, lo), "photons": photons, "gap": abs(gap)}


def population_exchange_state(system: SystemLike, H0, rho, pair: Tuple[float, float],
                              s: Optional[EvolutionSettings] = None,
                              amplitude: Optional[float] = None,
                              records: Optional[List[StepRecord]] = None) -> np.ndarray:
    """State after the calibrated exchange pulse of an m pair"""
    system = as_system(system)
    spin = _single_spin(system)
    s = s or EvolutionSettings()
    pulse, info = exchange_pulse(system, H0, pair, amplitude)
    hi, lo = info["levels"]

    if info["photons"] == 1:
        duration = calibrated_pulse_duration(spin, min(pair), pulse, math.pi)
        probability = None
    else:
        # perturbative two-photon exchange time with g = gamma B1
        g = abs(spin.gyro_ratio_over_2pi) * effective_amplitude(pulse) / 2
        if g == 0:
            raise InvalidParameterError("Two-photon exchange needs a non-zero gyromagnetic ratio")
        estimate = info["gap"] / (16 * math.sqrt(3) * g ** 2)
        duration, probability = calibrate_exchange_duration(
            system, H0, pulse, (lo, hi), protocol_defaults.TWO_PHOTON_WINDOW * estimate, s
        )

    out = evolve(system, H0, rho, pulse, duration, s)
    if records is not None:
        details = {
            "polarization": pulse.polarization,
            "frequency_MHz": pulse.max_frequency,
            "amplitude_T": pulse.components[0].amplitude,
            "photons": info["photons"],
        }
        if probability is not None:
            details["exchange_probability"] = probability
        records.append(StepRecord(
            len(records), "pulse",
            f"{pulse.polarization} exchange m={max(pair):+g} <-> m={min(pair):+g}",
            duration, details,
        ))
    logger.info("%s exchange m=%+g <-> m=%+g: %.6g us", pulse.polarization, max(pair), min(pair), duration)
    return out


def pseudopure_temporal_average(system: SystemLike, H0, target: str,
                                s: Optional[EvolutionSettings] = None,
                                thermal: Optional[ThermalParams] = None,
                                records: Optional[List[StepRecord]] = None) -> np.ndarray:
    """
    Average of three experiments on the thermal state of a spin-3/2: untouched,
    after a single-photon exchange and after a two-photon exchange chosen for
    the target label.
    """
    spin = _single_spin(system)
    if spin.dimension != 4:
        raise InvalidParameterError("Pseudopure preparation needs a spin-3/2 nucleus")
    if target not in PSEUDOPURE_RECIPES:
        raise InvalidParameterError(
            f"Unknown target {target!r}, expected one of {sorted(PSEUDOPURE_RECIPES)}"
        )
    single, double = PSEUDOPURE_RECIPES[target]
    rho_thermal = canonical_density_matrix(H0, thermal)

    experiments = [
        rho_thermal,
        population_exchange_state(system, H0, rho_thermal, single, s, records=records),
        population_exchange_state(system, H0, rho_thermal, double, s, records=records),
    ]
    average = sum(experiments) / len(experiments)
    return (average + average.conj().T) / 2


# ---------------------------------------------------------------------------
# CNOT gates
# ---------------------------------------------------------------------------

def cnot_nqr(system: SystemLike, H0, rho_in, s: Optional[EvolutionSettings] = None,
             amplitude: Optional[float] = None,
             records: Optional[List[StepRecord]] = None) -> np.ndarray:
    """Selective pi pulse exchanging |-1/2> and |-3/2>, i.e. |10> <-> |11>"""
    spin = _single_spin(system)
    if spin.dimension != 4:
        raise InvalidParameterError("The NQR CNOT needs a spin-3/2 nucleus")
    return population_exchange_state(system, H0, rho_in, (-0.5, -1.5), s, amplitude, records)


def _larmor_frequencies(H0: np.ndarray) -> Tuple[float, float, float]:
    """(nu_1, nu_2, J) of two coupled spin-1/2 from a diagonal H0"""
    if np.max(np.abs(H0 - np.diag(np.diag(H0)))) > tolerances.HERMITIAN:
        raise InvalidParameterError("The NMR CNOT needs H0 diagonal in the Zeeman basis")
    e = np.real(np.diag(H0))
    nu_1 = ((e[2] - e[0]) + (e[3] - e[1])) / 2
    nu_2 = ((e[1] - e[0]) + (e[3] - e[2])) / 2
    J = e[0] + e[3] - e[1] - e[2]
    return float(nu_1), float(nu_2), float(J)


def selective_rotation_step(system: MultiSpinSystem, site: int, axis: str, angle: float,
                            carrier: float, amplitude: float) -> PulseSequenceStep:
    """
    Resonant linear pulse rotating one spin by `angle` about x or y of its
    carrier frame.

    A phase-0 pulse turns a positive-gamma spin by -theta about x and a
    phase-pi/2 pulse by -theta about y.
    """
    gamma = system.spins[site].gyro_ratio_over_2pi
    if axis == "x":
        phase = 0.0 if gamma > 0 else math.pi
    elif axis == "y":
        phase = math.pi / 2
    else:
        raise InvalidParameterError(f"Selective pulses rotate about x or y, got {axis!r}")
    if angle > 0:
        phase += math.pi

    pulse = make_linear_pulse(amplitude, carrier, phase)
    duration = pulse_duration_for_angle(gamma, amplitude, 1.0, abs(angle))
    return PulseSequenceStep(
        "pulse", pulse, duration,
        label=f"({angle:+.4g})_{axis} on spin {site + 1}, {duration:.6g} us",
    )


def cnot_nmr_sequence(system: SystemLike, H0, amplitude: Optional[float] = None) -> List[PulseSequenceStep]:
    """
    CNOT_1 = (-pi/2)z on I1, (pi/2)z on I2, (-pi/2)x on I2, U(1/2J), (-pi/2)y on I2,
    listed in the order the factors act.
    """
    system = as_system(system)
    if system.count != 2 or system.dims != [2, 2]:
        raise InvalidParameterError("The NMR CNOT needs two spin-1/2 nuclei")
    H = as_matrix(H0)
    nu_1, nu_2, J = _larmor_frequencies(H)
    if J <= 0:
        raise InvalidParameterError(f"The NMR CNOT needs a positive J coupling, got {J:.6g} MHz")
    separation = abs(abs(nu_1) - abs(nu_2))
    if separation <= 2 * J:
        raise SelectivityError(
            f"Larmor frequencies {abs(nu_1):.6g} and {abs(nu_2):.6g} MHz are not resolved"
        )

    amplitude = amplitude or protocol_defaults.NMR_PULSE_AMPLITUDE
    rabi_other = abs(system.spins[0].gyro_ratio_over_2pi) * amplitude
    if rabi_other > 0.05 * separation:
        logger.warning("Weak selectivity: off-resonant Rabi %.4g MHz vs separation %.4g MHz",
                       rabi_other, separation)

    carrier = abs(nu_2)
    return [
        selective_rotation_step(system, 1, "y", -math.pi / 2, carrier, amplitude),
        PulseSequenceStep("free_evolution", duration=1 / (2 * J), label="U(1/2J)"),
        selective_rotation_step(system, 1, "x", -math.pi / 2, carrier, amplitude),
        PulseSequenceStep("rotation", site=1, axis="z", angle=math.pi / 2, label="(+pi/2)_z on spin 2"),
        PulseSequenceStep("rotation", site=0, axis="z", angle=-math.pi / 2, label="(-pi/2)_z on spin 1"),
    ]


def cnot_nmr(system: SystemLike, H0, rho_in, s: Optional[EvolutionSettings] = None,
             amplitude: Optional[float] = None,
             records: Optional[List[StepRecord]] = None) -> np.ndarray:
    """CNOT with spin 1 as control on two J-coupled spin-1/2 nuclei"""
    steps = cnot_nmr_sequence(system, H0, amplitude)
    return run_sequence(system, H0, rho_in, steps, s, records)
