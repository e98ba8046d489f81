"""
Error hierarchy of the simulator
"""
from typing import List, Optional


class SpinSimError(Exception):
    """Root of every error raised by the simulator"""


class DimensionMismatchError(SpinSimError, ValueError):
    """Operands have incompatible dimensions"""


class InvalidSpinError(SpinSimError, ValueError):
    """Spin quantum number is not a supported half-integer"""


class InvalidParameterError(SpinSimError, ValueError):
    """A parameter violates its physical or structural constraint"""


class QuadratureError(SpinSimError, ValueError):
    """Sampled trajectory is too short for composite quadrature"""


class UnitarityError(SpinSimError):
    """Propagator failed the unitarity gate (quadrature under-resolved)"""


class HighTemperatureApproximationError(SpinSimError):
    """Linearized thermal state is not positive at the requested temperature"""


class AliasingError(SpinSimError, ValueError):
    """Acquisition sampling rate is below the Nyquist margin"""


class SelectivityError(SpinSimError):
    """Selective pulses are impossible (degenerate resonance frequencies)"""


class ArtifactError(SpinSimError):
    """Reading or writing a result file failed"""


class ConfigError(SpinSimError):
    """Experiment configuration is invalid; carries every failure found"""

    def __init__(self, message: str, results: Optional[List] = None):
        super().__init__(message)
        self.results = results or []

    def __str__(self) -> str:
        if not self.results:
            return super().__str__()
        lines = [super().__str__()]
        lines.extend(f"  - {r.message}" for r in self.results)
        return "\n".join(lines)
