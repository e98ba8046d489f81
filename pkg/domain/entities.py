"""
Domain entities for the spin dynamics simulator
"""
from dataclasses import dataclass, field, replace
from datetime import datetime
from fractions import Fraction
from typing import Optional, Dict, List, Any, Tuple, Union
import math
import uuid

import numpy as np

from domain.exceptions import InvalidParameterError, InvalidSpinError

THERMAL_MODES = ("exact_boltzmann", "high_T_linearized")
PICTURES = ("interaction_H0", "rotating_frame")
STEP_KINDS = ("pulse", "free_evolution", "rotation")
POLARIZATIONS = ("linear", "sigma+", "sigma-")


def parse_half_integer(value: Union[str, float, int, Fraction]) -> float:
    """Read '3/2', 1.5 or Fraction(3, 2) as a float spin quantum number"""
    try:
        number = Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError):
        raise InvalidSpinError(f"Spin quantum number not understood: {value!r}")
    if number <= 0 or (2 * number).denominator != 1:
        raise InvalidSpinError(f"Spin quantum number must be a positive half-integer, got {value!r}")
    return float(number)


@dataclass
class NuclearSpin:
    """Single nucleus: spin quantum number and gyromagnetic ratio over 2pi (MHz/T)"""
    quantum_number: float
    gyro_ratio_over_2pi: float = 0.0

    def __post_init__(self):
        self.quantum_number = parse_half_integer(self.quantum_number)
        self.gyro_ratio_over_2pi = float(self.gyro_ratio_over_2pi)

    @property
    def dimension(self) -> int:
        return int(round(2 * self.quantum_number)) + 1

    @property
    def m_values(self) -> np.ndarray:
        """Magnetic quantum numbers in basis order, m = I, I-1, ..., -I"""
        return self.quantum_number - np.arange(self.dimension)


@dataclass
class SpinOperators:
    Ix: np.ndarray
    Iy: np.ndarray
    Iz: np.ndarray
    Iplus: np.ndarray
    Iminus: np.ndarray
    Isquared: np.ndarray

    def along(self, theta: float, phi: float) -> np.ndarray:
        """Projection n.I on the unit vector with polar angle theta and azimuth phi"""
        return (math.sin(theta) * math.cos(phi) * self.Ix
                + math.sin(theta) * math.sin(phi) * self.Iy
                + math.cos(theta) * self.Iz)


@dataclass
class MultiSpinSystem:
    """Ordered collection of nuclei; the first spin is the slow Kronecker index"""
    spins: List[NuclearSpin]

    def __post_init__(self):
        if isinstance(self.spins, NuclearSpin):
            self.spins = [self.spins]
        self.spins = list(self.spins)
        if not self.spins:
            raise InvalidParameterError("A spin system needs at least one nucleus")

    @property
    def dims(self) -> List[int]:
        return [s.dimension for s in self.spins]

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def count(self) -> int:
        return len(self.spins)


@dataclass
class ZeemanParams:
    field: float = 0.0  # T
    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if self.field < 0:
            raise InvalidParameterError(f"Static field must be non-negative, got {self.field} T")
        if not 0 <= self.theta <= math.pi:
            raise InvalidParameterError(f"theta_z must lie in [0, pi], got {self.theta}")


@dataclass
class QuadrupoleParams:
    coupling: float  # e2qQ/h, MHz
    eta: float = 0.0
    efg_orientation: Tuple[float, float, float] = (0.0, 0.0, 0.0)  # z-y-z Euler angles

    def __post_init__(self):
        if not 0 <= self.eta <= 1:
            raise InvalidParameterError(f"Asymmetry parameter eta must lie in [0, 1], got {self.eta}")
        self.efg_orientation = tuple(float(a) for a in self.efg_orientation)
        if len(self.efg_orientation) != 3:
            raise InvalidParameterError("EFG orientation needs three Euler angles")


@dataclass
class PulseComponent:
    """Linear RF component contributing 2*B1*cos(2 pi nu t - phase) along the axis"""
    amplitude: float  # T
    frequency: float  # MHz
    phase: float = 0.0
    axis_theta: float = math.pi / 2
    axis_phi: float = 0.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise InvalidParameterError(f"Pulse amplitude must be non-negative, got {self.amplitude} T")
        if self.frequency < 0:
            raise InvalidParameterError(f"Pulse frequency must be non-negative, got {self.frequency} MHz")


@dataclass
class Pulse:
    components: List[PulseComponent]
    polarization: str = "linear"

    def __post_init__(self):
        if isinstance(self.components, PulseComponent):
            self.components = [self.components]
        self.components = list(self.components)
        if not self.components:
            raise InvalidParameterError("A pulse needs at least one component")
        if self.polarization not in POLARIZATIONS:
            raise InvalidParameterError(f"Unknown polarization {self.polarization!r}")

    @property
    def max_frequency(self) -> float:
        return max(c.frequency for c in self.components)

    def delayed(self, start_time: float) -> "Pulse":
        """Same carrier, re-expressed on a clock that starts at start_time (us)"""
        shifted = [
            replace(c, phase=c.phase - 2 * math.pi * c.frequency * start_time)
            for c in self.components
        ]
        return Pulse(shifted, self.polarization)


@dataclass
class JCouplingMatrix:
    values: np.ndarray  # MHz, strictly upper triangular

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        n, m = self.values.shape
        if n != m:
            raise InvalidParameterError("J-coupling matrix must be square")
        if np.any(np.tril(self.values) != 0):
            raise InvalidParameterError("J-coupling matrix must be strictly upper triangular")

    @property
    def size(self) -> int:
        return self.values.shape[0]


@dataclass
class ThermalParams:
    temperature: float = 1e-4  # K
    mode: str = "exact_boltzmann"

    def __post_init__(self):
        if self.temperature <= 0:
            raise InvalidParameterError(f"Temperature must be positive, got {self.temperature} K")
        if self.mode not in THERMAL_MODES:
            raise InvalidParameterError(f"Thermal mode must be one of {THERMAL_MODES}")


@dataclass
class EvolutionSettings:
    picture: str = "interaction_H0"
    rrf_frequency: float = 0.0  # MHz
    rrf_theta: float = 0.0
    rrf_phi: float = 0.0
    magnus_order: int = 2
    quadrature_points_per_period: int = 100

    def __post_init__(self):
        if self.picture not in PICTURES:
            raise InvalidParameterError(f"Picture must be one of {PICTURES}")
        if self.magnus_order not in (1, 2, 3):
            raise InvalidParameterError(f"Magnus order must be 1, 2 or 3, got {self.magnus_order}")
        if self.quadrature_points_per_period < 8:
            raise InvalidParameterError("At least 8 quadrature points per period are required")


@dataclass
class AcquisitionParams:
    acquisition_time: float  # us
    sample_count: Optional[int] = None  # chosen from the Nyquist margin when None
    T2: float = 100.0  # us
    coil_theta: float = 0.0
    coil_phi: float = 0.0
    reference_frequency: float = 0.0  # MHz

    def __post_init__(self):
        if self.acquisition_time <= 0:
            raise InvalidParameterError("Acquisition time must be positive")
        if self.sample_count is not None and self.sample_count < 16:
            raise InvalidParameterError(f"At least 16 samples are required, got {self.sample_count}")
        if self.T2 <= 0:
            raise InvalidParameterError("T2 must be positive")


@dataclass
class FIDSignal:
    times: np.ndarray  # us
    samples: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.times.shape != self.samples.shape:
            raise InvalidParameterError("FID times and samples must have equal lengths")
        if self.times.size > 1:
            steps = np.diff(self.times)
            if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
                raise InvalidParameterError("FID times must be uniformly spaced and increasing")

    def __len__(self) -> int:
        return self.times.size


@dataclass
class Spectrum:
    frequencies: np.ndarray  # MHz
    amplitudes: np.ndarray

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.frequencies.shape != self.amplitudes.shape:
            raise InvalidParameterError("Spectrum frequencies and amplitudes must have equal lengths")
        if np.any(np.diff(self.frequencies) <= 0):
            raise InvalidParameterError("Spectrum frequencies must be strictly increasing")

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.amplitudes)

    @property
    def step(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0]) if self.frequencies.size > 1 else 0.0


@dataclass(frozen=True)
class TransitionFrequency:
    frequency: float  # MHz
    upper: int  # eigenvalue indices, ascending order
    lower: int


@dataclass
class PulseSequenceStep:
    kind: str
    pulse: Optional[Pulse] = None
    duration: float = 0.0  # us
    # rotation steps: exp(-i angle I_axis) on one site
    site: int = 0
    axis: str = "z"
    angle: float = 0.0
    label: str = ""

    def __post_init__(self):
        if self.kind not in STEP_KINDS:
            raise InvalidParameterError(f"Step kind must be one of {STEP_KINDS}, got {self.kind!r}")
        if self.duration < 0:
            raise InvalidParameterError("Step duration must be non-negative")
        if self.kind == "pulse" and self.pulse is None:
            raise InvalidParameterError("A pulse step needs a pulse")
        if self.kind == "rotation" and self.axis not in ("x", "y", "z"):
            raise InvalidParameterError(f"Rotation axis must be x, y or z, got {self.axis!r}")


@dataclass
class QubitBasisMap:
    """Computational label -> index of the spin basis vector"""
    labels: Dict[str, int]

    def __post_init__(self):
        indices = sorted(self.labels.values())
        if indices != list(range(len(indices))):
            raise InvalidParameterError("Qubit basis map must be a bijection onto the basis")

    def index(self, label: str) -> int:
        if label not in self.labels:
            raise InvalidParameterError(f"Unknown computational basis label {label!r}")
        return self.labels[label]

    @classmethod
    def for_dimension(cls, dim: int) -> "QubitBasisMap":
        width = int(round(math.log2(dim)))
        if 2 ** width != dim:
            raise InvalidParameterError(f"Dimension {dim} does not encode whole qubits")
        return cls({format(i, f"0{width}b"): i for i in range(dim)})


@dataclass
class StepRecord:
    index: int
    kind: str
    description: str
    duration: float = 0.0
    details: Dict[str, Any] = field(default_factory=dict)


@dataclass
class ExperimentResult:
    run_id: str
    name: str
    system: MultiSpinSystem
    h0: np.ndarray
    initial_state: np.ndarray
    final_state: np.ndarray
    fid: Optional[FIDSignal]
    spectra: List[Spectrum]
    steps: List[StepRecord]
    transitions: List[TransitionFrequency]
    wall_time: float = 0.0
    created: datetime = field(default_factory=datetime.now)

    def __post_init__(self):
        if not self.run_id:
            self.run_id = str(uuid.uuid4())

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.final_state))


@dataclass
class ValidationResult:
    validation_id: str
    is_valid: bool
    severity: str
    message: str
    details: Optional[Dict[str, Any]] = None

    @property
    def is_blocking(self) -> bool:
        return self.severity == 'blocking' and not self.is_valid
