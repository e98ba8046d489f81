"""
Free induction decay synthesis and its Fourier spectrum
"""
from typing import List, Tuple, Union
import logging
import math

import numpy as np
from scipy import linalg, signal
from scipy.integrate import trapezoid

from config import settings
from domain.entities import AcquisitionParams, FIDSignal, Spectrum, TransitionFrequency
from domain.exceptions import AliasingError, DimensionMismatchError, InvalidParameterError
from domain.operators import as_matrix, is_hermitian, matrix_exp
from domain.spin import SystemLike, as_system, total_operator

logger = logging.getLogger(__name__)

# sampling rate / largest demodulated frequency
NYQUIST_FACTOR = 4.0
SAMPLE_MARGIN = 1.25
MIN_SAMPLES = 16
# frequency rows evaluated per block by fourier_transform_signal
FT_CHUNK = 512


def transition_frequencies(H0) -> List[TransitionFrequency]:
    """Every eigenvalue difference E_upper - E_lower (upper > lower in ascending order), sorted"""
    H = as_matrix(H0)
    if not is_hermitian(H):
        raise InvalidParameterError("transition_frequencies needs a Hermitian H0")
    energies = linalg.eigvalsh(H)
    transitions = [
        TransitionFrequency(float(energies[upper] - energies[lower]), upper, lower)
        for upper in range(len(energies))
        for lower in range(upper)
    ]
    return sorted(transitions, key=lambda tr: (tr.frequency, tr.upper, tr.lower))


def _largest_offset(H0, reference_frequency: float) -> float:
    """max |nu - nu_ref| over the signed frequencies the FID can contain"""
    energies = linalg.eigvalsh(as_matrix(H0))
    gaps = energies[:, None] - energies[None, :]
    return float(np.max(np.abs(gaps - reference_frequency)))


def default_sample_count(H0, acquisition_time: float, reference_frequency: float = 0.0) -> int:
    rate = NYQUIST_FACTOR * SAMPLE_MARGIN * _largest_offset(H0, reference_frequency)
    return max(MIN_SAMPLES, math.ceil(rate * acquisition_time) + 1)


def detection_operator(system: SystemLike, theta: float = 0.0, phi: float = 0.0) -> np.ndarray:
    """R I+ R^dagger with R = exp(-i phi Iz) exp(-i theta Iy) on the total spin"""
    system = as_system(system)
    Iplus = total_operator(system, "plus")
    if theta == 0 and phi == 0:
        return Iplus
    R = (matrix_exp(-1j * phi * total_operator(system, "z"))
         @ matrix_exp(-1j * theta * total_operator(system, "y")))
    return R @ Iplus @ R.conj().T


def fid_signal(system: SystemLike, H0, rho, acq: AcquisitionParams) -> FIDSignal:
    """
    S(t) = Tr[rho(t) M] exp(-t/T2) exp(+i 2pi nu_ref t) on a uniform grid from 0.

    rho(t) is the free evolution of rho under H0, computed once in the H0
    eigenbasis so each sample costs one weighted sum of phases.
    """
    system = as_system(system)
    H = as_matrix(H0)
    R = as_matrix(rho)
    if H.shape != R.shape or H.shape[0] != system.total_dim:
        raise DimensionMismatchError(
            f"rho {R.shape} and H0 {H.shape} do not match a system of dim {system.total_dim}"
        )

    n = acq.sample_count or default_sample_count(H, acq.acquisition_time, acq.reference_frequency)
    rate = (n - 1) / acq.acquisition_time
    needed = NYQUIST_FACTOR * _largest_offset(H, acq.reference_frequency)
    if rate < needed:
        raise AliasingError(
            f"{n} samples over {acq.acquisition_time} us give {rate:.6g} MHz, "
            f"below the required {needed:.6g} MHz"
        )
    times = np.linspace(0.0, acq.acquisition_time, n)

    energies, V = linalg.eigh(H)
    M = detection_operator(system, acq.coil_theta, acq.coil_phi)
    rho_e = V.conj().T @ R @ V
    M_e = V.conj().T @ M @ V
    weights = rho_e * M_e.T  # rho_ij M_ji
    gaps = (energies[:, None] - energies[None, :]).ravel()

    keep = np.abs(weights.ravel()) > 0
    phases = np.exp(-2j * np.pi * np.outer(times, gaps[keep]))
    samples = phases @ weights.ravel()[keep]
    samples *= np.exp(-times / acq.T2 + 2j * np.pi * acq.reference_frequency * times)

    logger.debug("FID: %d samples over %.6g us", n, acq.acquisition_time)
    return FIDSignal(times, samples)


def _transform(fid: FIDSignal, frequencies: np.ndarray) -> np.ndarray:
    amplitudes = np.empty(frequencies.size, dtype=complex)
    for start in range(0, frequencies.size, FT_CHUNK):
        block = frequencies[start:start + FT_CHUNK]
        kernel = np.exp(-2j * np.pi * np.outer(block, fid.times))
        amplitudes[start:start + FT_CHUNK] = trapezoid(kernel * fid.samples[None, :], x=fid.times, axis=1)
    return amplitudes


def fourier_transform_signal(fid: FIDSignal, frequency_start: float, frequency_stop: float,
                             grid_points: int = settings.DEFAULT_GRID_POINTS,
                             include_opposite: bool = False,
                             ) -> Union[Spectrum, Tuple[Spectrum, Spectrum]]:
    """
    Integral of S(t) exp(-i 2pi nu t) over the acquisition window, trapezoid rule,
    on `grid_points` frequencies in [start, stop].

    With include_opposite the spectrum over [-stop, -start] is returned too,
    as (direct, opposite).
    """
    if len(fid) == 0:
        raise InvalidParameterError("Cannot transform an empty FID")
    if len(fid) < 2:
        raise InvalidParameterError("The trapezoid rule needs at least two FID samples")
    if not frequency_start < frequency_stop:
        raise InvalidParameterError(
            f"Frequency window must satisfy start < stop, got [{frequency_start}, {frequency_stop}]"
        )
    if grid_points < 2:
        raise InvalidParameterError(f"At least two frequency points are required, got {grid_points}")

    frequencies = np.linspace(frequency_start, frequency_stop, grid_points)
    direct = Spectrum(frequencies, _transform(fid, frequencies))
    if not include_opposite:
        return direct

    opposite_freqs = np.linspace(-frequency_stop, -frequency_start, grid_points)
    return direct, Spectrum(opposite_freqs, _transform(fid, opposite_freqs))


def find_peaks(spectrum: Spectrum, threshold: float = 0.1) -> List[float]:
    """Frequencies of local maxima of |S(nu)| above threshold * max|S|"""
    magnitude = spectrum.magnitude
    top = float(magnitude.max()) if magnitude.size else 0.0
    if top == 0:
        return []
    indices, _ = signal.find_peaks(magnitude, height=threshold * top)
    return [float(spectrum.frequencies[i]) for i in indices]

