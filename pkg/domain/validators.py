"""
Physics validators for experiment configurations
"""
from typing import List, Tuple
import math

from config import settings
from domain.entities import ValidationResult, parse_half_integer
from domain.exceptions import InvalidSpinError
from domain.protocols import PSEUDOPURE_RECIPES
from domain.schema import (
    AcquisitionConfig, EvolutionConfig, ExperimentConfig, MatrixFileState,
    PopulationsState, SystemConfig, TransformConfig,
)


def _failure(validation_id: str, message: str, severity: str = "blocking", **details) -> ValidationResult:
    return ValidationResult(
        validation_id=validation_id,
        is_valid=False,
        severity=severity,
        message=message,
        details=details,
    )


class ExperimentValidator:
    """Validator for the preconditions of every operation a config triggers"""

    def validate_spins(self, system: SystemConfig) -> List[ValidationResult]:
        """
        Validate quantum numbers, per-spin quadrupole blocks and the total dimension
        """
        results = []
        if not system.spins:
            results.append(_failure("spins_present", "system.spins: at least one spin is required"))
            return results

        dimension = 1
        for k, spin in enumerate(system.spins):
            path = f"system.spins[{k}]"
            try:
                I = parse_half_integer(spin.I)
            except InvalidSpinError as e:
                results.append(_failure(f"spin_{k}_quantum_number", f"{path}.I: {e}", value=str(spin.I)))
                continue
            if I > settings.MAX_SPIN:
                results.append(_failure(
                    f"spin_{k}_too_large",
                    f"{path}.I = {spin.I} exceeds the supported maximum {settings.MAX_SPIN}",
                ))
            dimension *= int(round(2 * I)) + 1

            q = spin.quadrupole
            if q is not None:
                if not 0 <= q.eta <= 1:
                    results.append(_failure(
                        f"spin_{k}_eta",
                        f"{path}.quadrupole.eta = {q.eta} outside [0, 1]",
                        eta=q.eta,
                    ))
                if len(q.efg_orientation) != 3:
                    results.append(_failure(
                        f"spin_{k}_efg_orientation",
                        f"{path}.quadrupole.efg_orientation needs 3 Euler angles, got {len(q.efg_orientation)}",
                    ))
                if I < 1 and q.coupling:
                    results.append(_failure(
                        f"spin_{k}_quadrupole_spin_half",
                        f"{path}.quadrupole is ignored for I = 1/2 (no quadrupole moment)",
                        severity="warning",
                    ))

        if dimension > settings.MAX_DIMENSION:
            results.append(_failure(
                "dimension",
                f"system: Hilbert space dimension {dimension} exceeds {settings.MAX_DIMENSION}",
                dimension=dimension,
            ))
        return results

    def validate_fields(self, system: SystemConfig) -> List[ValidationResult]:
        """
        Validate Zeeman block, J-coupling matrix and temperature
        """
        results = []
        z = system.zeeman
        if z is not None:
            if z.field < 0:
                results.append(_failure("zeeman_field", f"system.zeeman.field = {z.field} T must be non-negative"))
            if not 0 <= z.theta <= math.pi:
                results.append(_failure("zeeman_theta", f"system.zeeman.theta = {z.theta} outside [0, pi]"))

        if system.j_coupling is not None:
            n = len(system.spins)
            rows = system.j_coupling
            if len(rows) != n or any(len(r) != n for r in rows):
                results.append(_failure(
                    "j_coupling_shape",
                    f"system.j_coupling must be {n}x{n} for {n} spins",
                ))
            elif any(rows[i][j] != 0 for i in range(n) for j in range(i + 1)):
                results.append(_failure(
                    "j_coupling_triangular",
                    "system.j_coupling must be strictly upper triangular (J_ij for i < j only)",
                ))

        if system.temperature <= 0:
            results.append(_failure(
                "temperature_positive",
                f"system.temperature = {system.temperature} K must be positive",
            ))
        return results

    def validate_initial_state(self, config: ExperimentConfig, dimension: int) -> List[ValidationResult]:
        results = []
        state = config.system.initial_state
        if isinstance(state, str):
            if state in ("canonical", "high_T"):
                return results
            if state.startswith("pure:"):
                label = state.split(":", 1)[1].strip()
                width = int(round(math.log2(dimension))) if dimension > 0 else 0
                if 2 ** width != dimension or len(label) != width or set(label) - {"0", "1"}:
                    results.append(_failure(
                        "initial_state_label",
                        f"system.initial_state: {label!r} is not a computational basis label "
                        f"of a {dimension}-level system",
                    ))
                return results
            results.append(_failure(
                "initial_state_kind",
                f"system.initial_state: unknown value {state!r} "
                "(expected canonical, high_T, pure:<label>, populations or matrix_file)",
            ))
        elif isinstance(state, PopulationsState):
            p = state.populations
            if len(p) != dimension:
                results.append(_failure(
                    "initial_state_populations_length",
                    f"system.initial_state.populations has {len(p)} entries for dimension {dimension}",
                ))
            if any(x < 0 for x in p):
                results.append(_failure(
                    "initial_state_populations_negative",
                    "system.initial_state.populations must be non-negative",
                ))
            if abs(sum(p) - 1) > 1e-9:
                results.append(_failure(
                    "initial_state_populations_trace",
                    f"system.initial_state.populations sum to {sum(p):.12g}, not 1",
                ))
        elif isinstance(state, MatrixFileState):
            path = config.source_dir / state.matrix_file
            if not path.exists():
                results.append(_failure(
                    "initial_state_matrix_file",
                    f"system.initial_state.matrix_file: {path} not found",
                ))
        return results

    def validate_sequence(self, config: ExperimentConfig) -> List[ValidationResult]:
        """
        Validate every step against the system it acts on
        """
        results = []
        spins = config.system.spins
        try:
            numbers = [parse_half_integer(s.I) for s in spins]
        except InvalidSpinError:
            numbers = []
        single_spin_3_2 = numbers == [1.5]

        for k, step in enumerate(config.sequence):
            path = f"sequence[{k}]"
            if step.kind == "pulse":
                if step.amplitude < 0:
                    results.append(_failure(f"step_{k}_amplitude", f"{path}.amplitude must be non-negative"))
                if step.frequency < 0:
                    results.append(_failure(f"step_{k}_frequency", f"{path}.frequency must be non-negative"))
                if (step.duration is None) == (step.angle is None):
                    results.append(_failure(
                        f"step_{k}_duration",
                        f"{path}: give exactly one of duration or angle",
                    ))
                if step.duration is not None and step.duration < 0:
                    results.append(_failure(f"step_{k}_duration_negative", f"{path}.duration must be non-negative"))
                if step.angle is not None:
                    if step.transition_m is None:
                        results.append(_failure(
                            f"step_{k}_transition",
                            f"{path}: a calibrated pulse (angle) needs transition_m",
                        ))
                    if step.amplitude == 0:
                        results.append(_failure(f"step_{k}_zero_amplitude", f"{path}: cannot calibrate a zero-amplitude pulse"))
                if not 0 <= step.site < len(spins):
                    results.append(_failure(f"step_{k}_site", f"{path}.site = {step.site} out of range"))
                elif step.angle is not None and step.transition_m is not None and numbers:
                    I, m = numbers[step.site], step.transition_m
                    if (I - m) % 1 or not -I <= m <= I - 1:
                        results.append(_failure(
                            f"step_{k}_transition_m",
                            f"{path}.transition_m = {m} is not a lower level of spin {I}",
                        ))
            elif step.kind == "free_evolution":
                if step.duration < 0:
                    results.append(_failure(f"step_{k}_duration", f"{path}.duration must be non-negative"))
            elif step.kind == "rotation":
                if not 0 <= step.site < len(spins):
                    results.append(_failure(f"step_{k}_site", f"{path}.site = {step.site} out of range"))
            elif step.kind == "pseudopure":
                if not single_spin_3_2:
                    results.append(_failure(f"step_{k}_system", f"{path}: pseudopure needs a single spin-3/2"))
                if step.target not in PSEUDOPURE_RECIPES:
                    results.append(_failure(
                        f"step_{k}_target",
                        f"{path}.target = {step.target!r} not in {sorted(PSEUDOPURE_RECIPES)}",
                    ))
            elif step.kind == "cnot_nqr":
                if not single_spin_3_2:
                    results.append(_failure(f"step_{k}_system", f"{path}: cnot_nqr needs a single spin-3/2"))
            elif step.kind == "cnot_nmr":
                if numbers != [0.5, 0.5]:
                    results.append(_failure(f"step_{k}_system", f"{path}: cnot_nmr needs two spin-1/2"))
                j = config.system.j_coupling
                if not j or len(j) != 2 or len(j[0]) != 2 or j[0][1] <= 0:
                    results.append(_failure(f"step_{k}_j_coupling", f"{path}: cnot_nmr needs a positive J coupling"))
                if config.system.zeeman is None or config.system.zeeman.field <= 0:
                    results.append(_failure(f"step_{k}_zeeman", f"{path}: cnot_nmr needs a static field"))
                elif len(spins) == 2 and spins[0].gyro_ratio_over_2pi == spins[1].gyro_ratio_over_2pi:
                    results.append(_failure(
                        f"step_{k}_selectivity",
                        f"{path}: cnot_nmr needs distinct gyromagnetic ratios",
                    ))
        return results

    def validate_evolution(self, evolution: EvolutionConfig) -> List[ValidationResult]:
        results = []
        if evolution.magnus_order not in (1, 2, 3):
            results.append(_failure(
                "magnus_order",
                f"evolution.magnus_order = {evolution.magnus_order} not in {{1, 2, 3}}",
            ))
        if evolution.quadrature_points_per_period < 8:
            results.append(_failure(
                "quadrature_points",
                f"evolution.quadrature_points_per_period = {evolution.quadrature_points_per_period} below 8",
            ))
        if evolution.picture == "interaction_H0" and evolution.rrf_frequency:
            results.append(_failure(
                "rrf_unused",
                "evolution.rrf_frequency is ignored outside the rotating_frame picture",
                severity="warning",
            ))
        return results

    def validate_acquisition(self, acquisition: AcquisitionConfig) -> List[ValidationResult]:
        results = []
        if acquisition.acquisition_time <= 0:
            results.append(_failure("acquisition_time", "acquisition.acquisition_time must be positive"))
        if acquisition.sample_count is not None and acquisition.sample_count < 16:
            results.append(_failure(
                "sample_count",
                f"acquisition.sample_count = {acquisition.sample_count} below 16",
            ))
        if acquisition.T2 <= 0:
            results.append(_failure("T2", "acquisition.T2 must be positive"))
        return results

    def validate_transform(self, transform: TransformConfig, has_acquisition: bool) -> List[ValidationResult]:
        results = []
        if not transform.frequency_start < transform.frequency_stop:
            results.append(_failure(
                "frequency_window",
                f"transform: frequency_start ({transform.frequency_start}) must be below "
                f"frequency_stop ({transform.frequency_stop})",
            ))
        if transform.grid_points < 2:
            results.append(_failure("grid_points", "transform.grid_points must be at least 2"))
        if not has_acquisition:
            results.append(_failure("transform_without_fid", "transform needs an acquisition block"))
        return results

    def run_all_validations(self, config: ExperimentConfig) -> Tuple[bool, List[ValidationResult]]:
        """
        Run all validations and return overall result
        """
        all_results = []

        all_results.extend(self.validate_spins(config.system))
        all_results.extend(self.validate_fields(config.system))

        dimension = 1
        for spin in config.system.spins:
            try:
                dimension *= int(round(2 * parse_half_integer(spin.I))) + 1
            except InvalidSpinError:
                dimension = 0
        if dimension:
            all_results.extend(self.validate_initial_state(config, dimension))

        all_results.extend(self.validate_sequence(config))
        all_results.extend(self.validate_evolution(config.evolution))
        if config.acquisition is not None:
            all_results.extend(self.validate_acquisition(config.acquisition))
        if config.transform is not None:
            all_results.extend(self.validate_transform(config.transform, config.acquisition is not None))

        if not all_results:
            all_results.append(ValidationResult(
                validation_id="config_valid",
                is_valid=True,
                severity="info",
                message="Configuration valid",
                details={},
            ))

        has_blocking = any(r.is_blocking for r in all_results)
        return not has_blocking, all_results
