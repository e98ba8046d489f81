"""
Tests for FID synthesis, the Fourier transform and peak search
"""
import math
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy import linalg

sys.path.insert(0, str(Path(__file__).parent))

from domain.entities import AcquisitionParams, FIDSignal, NuclearSpin, QuadrupoleParams, Spectrum, ZeemanParams
from domain.evolution import nuclear_system_setup
from domain.exceptions import AliasingError, InvalidParameterError
from domain.hamiltonians import h_quadrupole, h_unperturbed
from domain.measurement import (
    default_sample_count, detection_operator, fid_signal, find_peaks, fourier_transform_signal,
    transition_frequencies,
)
from domain.operators import random_hermitian
from domain.spin import as_system, spin_operators

HALF = spin_operators(0.5)
PROBE = NuclearSpin("1/2", 1.0)
PROBE_H0 = h_unperturbed(PROBE, ZeemanParams(field=1.0))


def decaying_tone(nu0, T2, acquisition_time, samples):
    times = np.linspace(0.0, acquisition_time, samples)
    return FIDSignal(times, np.exp(2j * np.pi * nu0 * times - times / T2))


def test_transition_frequencies_sorted_pairs():
    """Test every eigenvalue difference with its index pair"""
    H = np.diag([0.4, 0.1, -0.5])
    lines = transition_frequencies(H)
    assert [round(t.frequency, 12) for t in lines] == [0.3, 0.6, 0.9]
    assert (lines[-1].upper, lines[-1].lower) == (2, 0)

    with pytest.raises(InvalidParameterError):
        transition_frequencies(np.array([[0, 1], [0, 0]]))


def test_detection_operator_default_and_tilted():
    """Test I+ by default and its rotation by the coil angles"""
    system = as_system(NuclearSpin(1))
    ops = spin_operators(1)
    np.testing.assert_array_equal(detection_operator(system), ops.Iplus)
    tilted = detection_operator(system, theta=math.pi / 2)
    np.testing.assert_allclose(tilted, -ops.Iz + 1j * ops.Iy, atol=1e-12)


def test_fid_of_transverse_magnetization():
    """Test S(t) = Tr[rho(t) I+] exp(-t/T2) for a spin-1/2 coherence"""
    rho = np.eye(2) / 2 + 0.2 * HALF.Ix
    acq = AcquisitionParams(acquisition_time=5.0, sample_count=401, T2=2.0)
    fid = fid_signal(PROBE, PROBE_H0, rho, acq)
    expected = 0.1 * np.exp(-2j * np.pi * fid.times - fid.times / 2.0)
    assert len(fid) == 401
    assert fid.samples[0] == pytest.approx(0.1, abs=1e-14)
    np.testing.assert_allclose(fid.samples, expected, atol=1e-12)


def test_fid_reference_frequency_demodulates():
    """Test that the reference frequency moves the line to zero"""
    rho = np.eye(2) / 2 + 0.2 * HALF.Ix
    acq = AcquisitionParams(acquisition_time=5.0, sample_count=401, T2=1e9, reference_frequency=1.0)
    fid = fid_signal(PROBE, PROBE_H0, rho, acq)
    np.testing.assert_allclose(fid.samples, 0.1 * np.ones(401), atol=1e-9)


def test_fid_without_decay_has_constant_magnitude():
    """Test |S(t)| of a single line when T2 is very long"""
    rho = np.eye(2) / 2 + 0.2 * HALF.Iy
    fid = fid_signal(PROBE, PROBE_H0, rho, AcquisitionParams(acquisition_time=10.0, T2=1e9))
    np.testing.assert_allclose(np.abs(fid.samples), 0.1, rtol=1e-6)


def test_fid_of_equilibrium_state_is_zero():
    """Test that populations alone give no signal"""
    system, H0, rho0 = nuclear_system_setup([PROBE], ZeemanParams(field=1.0))
    fid = fid_signal(system, H0, rho0, AcquisitionParams(acquisition_time=2.0))
    np.testing.assert_allclose(fid.samples, 0.0, atol=1e-15)


def test_default_sample_count_respects_nyquist_margin():
    """Test the automatic sample count and the minimum"""
    n = default_sample_count(PROBE_H0, 10.0)
    rate = (n - 1) / 10.0
    assert rate >= 4 * 1.0
    assert default_sample_count(np.zeros((2, 2)), 10.0) == 16


def test_aliasing_is_refused():
    """Test that undersampled acquisitions raise"""
    rho = np.eye(2) / 2 + 0.2 * HALF.Ix
    with pytest.raises(AliasingError):
        fid_signal(PROBE, PROBE_H0, rho, AcquisitionParams(acquisition_time=100.0, sample_count=16))


def test_lorentzian_line_shape():
    """Test peak position, height T2 and half width 1/(2 pi T2) of the real part"""
    nu0, T2 = 0.5, 1.0
    fid = decaying_tone(nu0, T2, 20.0, 4001)
    spectrum = fourier_transform_signal(fid, nu0 - 1.0, nu0 + 1.0, 2001)
    real = spectrum.amplitudes.real

    peak = int(np.argmax(real))
    assert spectrum.frequencies[peak] == pytest.approx(nu0, abs=1e-9)
    assert real[peak] == pytest.approx(T2, rel=1e-3)

    above = spectrum.frequencies[real >= real[peak] / 2]
    half_width = (above.max() - above.min()) / 2
    assert half_width == pytest.approx(1 / (2 * np.pi * T2), abs=2 * spectrum.step)


def test_transform_is_linear():
    """Test FT(a S1 + b S2) = a FT(S1) + b FT(S2)"""
    s1 = decaying_tone(0.3, 2.0, 10.0, 501)
    s2 = decaying_tone(-0.7, 5.0, 10.0, 501)
    a, b = 2.0 - 1.0j, 0.5
    combined = FIDSignal(s1.times, a * s1.samples + b * s2.samples)

    def f(fid):
        return fourier_transform_signal(fid, -1.0, 1.0, 301).amplitudes

    np.testing.assert_allclose(f(combined), a * f(s1) + b * f(s2), atol=1e-10)


def test_transform_opposite_window():
    """Test that the opposite window mirrors the frequency range"""
    fid = decaying_tone(-2.0, 3.0, 15.0, 601)
    direct, opposite = fourier_transform_signal(fid, 1.5, 2.5, 101, include_opposite=True)
    np.testing.assert_allclose(opposite.frequencies, -direct.frequencies[::-1])
    assert find_peaks(opposite) == [pytest.approx(-2.0)]
    assert opposite.magnitude.max() > 10 * direct.magnitude.max()


def test_transform_rejects_bad_windows():
    """Test window and grid checks"""
    fid = decaying_tone(0.0, 1.0, 1.0, 11)
    with pytest.raises(InvalidParameterError):
        fourier_transform_signal(fid, 1.0, 0.0)
    with pytest.raises(InvalidParameterError):
        fourier_transform_signal(fid, 0.0, 1.0, grid_points=1)
    with pytest.raises(InvalidParameterError):
        fourier_transform_signal(FIDSignal([0.0], [1.0]), 0.0, 1.0)


def test_find_peaks_threshold():
    """Test that only local maxima above the threshold are returned"""
    freqs = np.linspace(0.0, 1.0, 101)
    amps = np.exp(-((freqs - 0.3) / 0.02) ** 2) + 0.05 * np.exp(-((freqs - 0.7) / 0.02) ** 2)
    spectrum = Spectrum(freqs, amps)
    assert find_peaks(spectrum) == [pytest.approx(0.3)]
    assert find_peaks(spectrum, threshold=0.01) == [pytest.approx(0.3), pytest.approx(0.7)]
    assert find_peaks(Spectrum(freqs, np.zeros(101))) == []


def test_zeeman_line_sits_at_negative_frequency():
    """Test the sign convention: positive gamma puts the Larmor line at -gamma B0"""
    rho = np.eye(2) / 2 + 0.2 * HALF.Ix
    fid = fid_signal(PROBE, PROBE_H0, rho, AcquisitionParams(acquisition_time=20.0, T2=5.0))
    direct, opposite = fourier_transform_signal(fid, 0.5, 1.5, 201, include_opposite=True)
    assert find_peaks(opposite) == [pytest.approx(-1.0, abs=opposite.step)]
    assert direct.magnitude.max() < 0.1 * opposite.magnitude.max()


def test_spectrum_peaks_match_transitions():
    """Test that every strong peak lies on a transition frequency"""
    rng = np.random.default_rng(17)
    for k in range(50):
        kind = k % 3
        if kind == 0:
            spin = NuclearSpin("1/2", rng.uniform(1.0, 4.0))
            H0 = h_unperturbed(spin, ZeemanParams(field=rng.uniform(0.05, 0.3), theta=rng.uniform(0, math.pi)))
        else:
            spin = NuclearSpin("1" if kind == 1 else "3/2", rng.uniform(1.0, 4.0))
            quad = QuadrupoleParams(rng.uniform(0.5, 2.0), rng.uniform(0.2, 0.8),
                                    tuple(rng.uniform(0, math.pi, 3)))
            H0 = h_quadrupole(spin, quad)
        d = spin.dimension

        # coherences only, written in the eigenbasis of H0
        _, V = linalg.eigh(H0)
        G = random_hermitian(d, rng)
        np.fill_diagonal(G, 0)
        rho = V @ (np.eye(d) / d + 0.02 * G) @ V.conj().T
        fid = fid_signal(spin, H0, rho, AcquisitionParams(acquisition_time=150.0, T2=15.0))

        lines = np.array([t.frequency for t in transition_frequencies(H0)])
        direct, opposite = fourier_transform_signal(fid, 0.02, lines.max() + 0.2, 800, include_opposite=True)
        scale = max(direct.magnitude.max(), opposite.magnitude.max())
        found = 0
        for spectrum in (direct, opposite):
            for f in find_peaks(spectrum, threshold=0.1 * scale / spectrum.magnitude.max()):
                found += 1
                assert np.min(np.abs(lines - abs(f))) <= 2 * spectrum.step, f"peak {f} off every line"
        assert found > 0


SPIN_ONE = NuclearSpin(1, 3.08)
SPIN_ONE_H0 = h_quadrupole(SPIN_ONE, QuadrupoleParams(1.0, 0.6))


def coherent_state(H0, amplitude, skip=None):
    """I/d plus equal coherences on every transition of H0 except the one at `skip` MHz"""
    d = H0.shape[0]
    _, V = linalg.eigh(H0)
    G = np.zeros((d, d), dtype=complex)
    for t in transition_frequencies(H0):
        if skip is None or abs(t.frequency - skip) > 1e-9:
            G[t.upper, t.lower] = G[t.lower, t.upper] = amplitude
    return V @ (np.eye(d) / d + G) @ V.conj().T


@pytest.mark.parametrize("skip, visible", [(None, True), (0.9, False)])
def test_line_without_coherence_is_suppressed(skip, visible):
    """Test that a transition with no coherence stays below 1% of the dominant peak"""
    rho = coherent_state(SPIN_ONE_H0, 0.05, skip)
    fid = fid_signal(SPIN_ONE, SPIN_ONE_H0, rho, AcquisitionParams(acquisition_time=2000.0, T2=200.0))
    direct, opposite = fourier_transform_signal(fid, 0.25, 0.95, 701, include_opposite=True)
    scale = max(direct.magnitude.max(), opposite.magnitude.max())

    at_line = max(direct.magnitude[np.argmin(np.abs(direct.frequencies - 0.9))],
                  opposite.magnitude[np.argmin(np.abs(opposite.frequencies + 0.9))])
    if visible:
        assert at_line > 0.1 * scale
    else:
        assert at_line < 0.01 * scale


def test_real_tone_has_conjugate_symmetric_spectrum():
    """Test S(-nu) = conj(S(nu)) for a real decaying cosine"""
    times = np.linspace(0.0, 20.0, 2001)
    fid = FIDSignal(times, np.cos(2 * np.pi * 0.8 * times) * np.exp(-times / 4.0))
    direct, opposite = fourier_transform_signal(fid, 0.3, 1.3, 201, include_opposite=True)
    np.testing.assert_allclose(opposite.frequencies, -direct.frequencies[::-1])
    np.testing.assert_allclose(opposite.amplitudes[::-1], np.conj(direct.amplitudes), atol=1e-12)
