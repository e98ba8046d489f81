"""
Experiment engine: system setup, pulse sequence, acquisition and transform
"""
from datetime import datetime
from typing import List, Optional, Tuple
import json
import logging
import math
import time

import numpy as np

from domain.entities import (
    AcquisitionParams, EvolutionSettings, ExperimentResult, FIDSignal, JCouplingMatrix,
    MultiSpinSystem, NuclearSpin, PulseSequenceStep, QuadrupoleParams, Spectrum,
    StepRecord, ThermalParams, ZeemanParams,
)
from domain.evolution import nuclear_system_setup
from domain.hamiltonians import make_circular_pulse, make_linear_pulse
from domain.measurement import fid_signal, find_peaks, fourier_transform_signal, transition_frequencies
from domain.operators import format_matrix
from domain.protocols import (
    calibrated_pulse_duration, cnot_nmr, cnot_nqr, pseudopure_decomposition,
    pseudopure_temporal_average, run_sequence,
)
from domain.schema import (
    ExperimentConfig, FreeEvolutionStepConfig, PopulationsState, PulseStepConfig,
    RotationStepConfig, StepConfig,
)
from domain.spin import basis_labels

logger = logging.getLogger(__name__)

PRIMITIVE_KINDS = ("pulse", "free_evolution", "rotation")


class ExperimentRunner:
    """Runs a validated ExperimentConfig from the initial state to the spectrum"""

    def build_system(self, config: ExperimentConfig,
                     initial_matrix: Optional[np.ndarray] = None,
                     ) -> Tuple[MultiSpinSystem, np.ndarray, np.ndarray]:
        """(system, H0, rho0) from the system block"""
        cfg = config.system
        spins = [NuclearSpin(s.I, s.gyro_ratio_over_2pi) for s in cfg.spins]
        quadrupoles = [
            QuadrupoleParams(s.quadrupole.coupling, s.quadrupole.eta, tuple(s.quadrupole.efg_orientation))
            if s.quadrupole is not None else None
            for s in cfg.spins
        ]
        zeeman = ZeemanParams(cfg.zeeman.field, cfg.zeeman.theta, cfg.zeeman.phi) if cfg.zeeman else None
        j_coupling = JCouplingMatrix(cfg.j_coupling) if cfg.j_coupling is not None else None

        if initial_matrix is not None:
            initial_state = initial_matrix
        elif isinstance(cfg.initial_state, PopulationsState):
            initial_state = cfg.initial_state.populations
        else:
            initial_state = cfg.initial_state

        return nuclear_system_setup(spins, zeeman, quadrupoles, j_coupling, initial_state, cfg.temperature)

    def build_settings(self, config: ExperimentConfig) -> EvolutionSettings:
        e = config.evolution
        return EvolutionSettings(
            picture=e.picture,
            rrf_frequency=e.rrf_frequency,
            rrf_theta=e.rrf_theta,
            rrf_phi=e.rrf_phi,
            magnus_order=e.magnus_order,
            quadrature_points_per_period=e.quadrature_points_per_period,
        )

    def build_step(self, step: StepConfig, system: MultiSpinSystem) -> PulseSequenceStep:
        """Translate a primitive step block into a PulseSequenceStep"""
        if isinstance(step, FreeEvolutionStepConfig):
            return PulseSequenceStep("free_evolution", duration=step.duration, label=step.label)
        if isinstance(step, RotationStepConfig):
            return PulseSequenceStep("rotation", site=step.site, axis=step.axis, angle=step.angle, label=step.label)
        if not isinstance(step, PulseStepConfig):
            raise TypeError(f"{step.kind} is not a primitive step")

        if step.polarization == "linear":
            theta = math.pi / 2 if step.axis_theta is None else step.axis_theta
            pulse = make_linear_pulse(step.amplitude, step.frequency, step.phase, theta, step.axis_phi)
        else:
            theta = 0.0 if step.axis_theta is None else step.axis_theta
            pulse = make_circular_pulse(step.polarization, step.amplitude, step.frequency,
                                        step.phase, theta, step.axis_phi)

        if step.duration is not None:
            duration = step.duration
        else:
            duration = calibrated_pulse_duration(system.spins[step.site], step.transition_m, pulse, step.angle)
            logger.info("Calibrated %.6g rad pulse on m=%+g -> m=%+g: %.6g us",
                        step.angle, step.transition_m, step.transition_m + 1, duration)
        return PulseSequenceStep("pulse", pulse, duration, label=step.label)

    def apply_sequence(self, config: ExperimentConfig, system: MultiSpinSystem, H0: np.ndarray,
                       rho0: np.ndarray, s: EvolutionSettings,
                       records: List[StepRecord]) -> np.ndarray:
        """
        Run the sequence block; consecutive primitive steps share one carrier clock
        """
        rho = rho0
        pending: List[PulseSequenceStep] = []

        def flush(state):
            if pending:
                state = run_sequence(system, H0, state, pending, s, records)
                pending.clear()
            return state

        for step in config.sequence:
            if step.kind in PRIMITIVE_KINDS:
                pending.append(self.build_step(step, system))
                continue

            rho = flush(rho)
            if step.kind == "pseudopure":
                thermal = ThermalParams(config.system.temperature, "exact_boltzmann")
                rho = pseudopure_temporal_average(system, H0, step.target, s, thermal, records)
            elif step.kind == "cnot_nqr":
                rho = cnot_nqr(system, H0, rho, s, step.amplitude, records)
            elif step.kind == "cnot_nmr":
                rho = cnot_nmr(system, H0, rho, s, step.amplitude, records)
        return flush(rho)

    def acquire(self, config: ExperimentConfig, system: MultiSpinSystem, H0: np.ndarray,
                rho: np.ndarray) -> Optional[FIDSignal]:
        a = config.acquisition
        if a is None:
            return None
        params = AcquisitionParams(
            acquisition_time=a.acquisition_time,
            sample_count=a.sample_count,
            T2=a.T2,
            coil_theta=a.coil_theta,
            coil_phi=a.coil_phi,
            reference_frequency=a.reference_frequency,
        )
        return fid_signal(system, H0, rho, params)

    def transform(self, config: ExperimentConfig, fid: Optional[FIDSignal]) -> List[Spectrum]:
        t = config.transform
        if t is None or fid is None:
            return []
        result = fourier_transform_signal(fid, t.frequency_start, t.frequency_stop,
                                          t.grid_points, t.include_opposite)
        return list(result) if isinstance(result, tuple) else [result]

    def run(self, config: ExperimentConfig, initial_matrix: Optional[np.ndarray] = None) -> ExperimentResult:
        started = time.perf_counter()

        # 1. System and initial state
        system, H0, rho0 = self.build_system(config, initial_matrix)
        s = self.build_settings(config)
        logger.info("%s: %d spin(s), dimension %d", config.name, system.count, system.total_dim)

        # 2. Sequence
        records: List[StepRecord] = []
        rho = self.apply_sequence(config, system, H0, rho0, s, records)

        # 3. Acquisition and transform
        fid = self.acquire(config, system, H0, rho)
        spectra = self.transform(config, fid)

        return ExperimentResult(
            run_id="",
            name=config.name,
            system=system,
            h0=H0,
            initial_state=rho0,
            final_state=rho,
            fid=fid,
            spectra=spectra,
            steps=records,
            transitions=transition_frequencies(H0),
            wall_time=time.perf_counter() - started,
            created=datetime.now(),
        )

    def render_report(self, result: ExperimentResult, config: ExperimentConfig) -> str:
        """Plain-text run report"""
        lines = [
            f"Run: {result.name} ({result.run_id})",
            f"Created: {result.created.isoformat(timespec='seconds')}",
            "",
            "Configuration:",
            json.dumps(config.model_dump(mode="json"), indent=2),
            "",
            "System:",
        ]
        for k, spin in enumerate(result.system.spins):
            lines.append(f"  spin {k + 1}: I = {spin.quantum_number:g}, gamma/2pi = {spin.gyro_ratio_over_2pi:g} MHz/T")
        lines.append(f"  dimension: {result.system.total_dim}")
        lines.append("  transitions (MHz):")
        for tr in result.transitions:
            lines.append(f"    {tr.frequency:.12g}  ({tr.upper} <- {tr.lower})")

        lines += ["", "Sequence:"]
        if not result.steps:
            lines.append("  (none)")
        for record in result.steps:
            lines.append(f"  [{record.index}] {record.kind}: {record.description}, {record.duration:.6g} us")
            for key, value in record.details.items():
                lines.append(f"      {key}: {value:.6g}" if isinstance(value, float) else f"      {key}: {value}")

        labels = basis_labels(result.system)
        lines += ["", "Final populations:"]
        for label, p in zip(labels, result.populations):
            m = ", ".join(f"{x:+g}" for x in label)
            lines.append(f"  |{m}>: {p:.12g}")

        a, b, psi, residual = pseudopure_decomposition(result.final_state)
        dominant = int(np.argmax(np.abs(psi)))
        lines += [
            "",
            f"Dominant eigenvector: basis index {dominant} (overlap {abs(psi[dominant]) ** 2:.6f}), "
            f"a = {a:.6g}, b = {b:.6g}, residual = {residual:.3g}",
            "Final state:",
            format_matrix(result.final_state),
        ]

        if result.spectra:
            peaks = sorted(f for s in result.spectra for f in find_peaks(s))
            lines += ["", "Spectrum peaks (MHz): " + (", ".join(f"{f:.6g}" for f in peaks) or "none")]

        lines += ["", f"Wall time: {result.wall_time:.3f} s", ""]
        return "\n".join(lines)
