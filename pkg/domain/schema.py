"""
Experiment configuration schema

Structure and types only; physical ranges are checked by ExperimentValidator
so every failure of a config is reported together.
"""
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Union
import math
import re

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator

from config import settings

_PI_EXPRESSION = re.compile(r"^\s*([+-]?)\s*(\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d+\.?\d*))?\s*$")


def parse_angle(value: Union[float, int, str]) -> float:
    """Radians from a number or an expression such as 'pi/2', '-pi', '2pi/3'"""
    if isinstance(value, (int, float)):
        angle = float(value)
    else:
        text = str(value).strip().lower()
        match = _PI_EXPRESSION.match(text)
        if not match:
            angle = float(text)
        else:
            sign, factor, divisor = match.groups()
            try:
                angle = (float(factor) if factor else 1.0) * math.pi / (float(divisor) if divisor else 1.0)
            except ZeroDivisionError:
                raise ValueError(f"angle {value!r} divides by zero") from None
            angle = -angle if sign == "-" else angle
    if not math.isfinite(angle):
        raise ValueError(f"angle {value!r} is not finite")
    return angle


Angle = Union[float, str]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class QuadrupoleConfig(StrictModel):
    coupling: float  # e2qQ/h, MHz
    eta: float = 0.0
    efg_orientation: List[Angle] = Field(default_factory=lambda: [0.0, 0.0, 0.0])

    @field_validator("efg_orientation")
    @classmethod
    def _angles(cls, v):
        return [parse_angle(a) for a in v]


class SpinConfig(StrictModel):
    I: Union[float, str]
    gyro_ratio_over_2pi: float = 0.0  # MHz/T
    quadrupole: Optional[QuadrupoleConfig] = None


class ZeemanConfig(StrictModel):
    field: float = 0.0  # T
    theta: Angle = 0.0
    phi: Angle = 0.0

    @field_validator("theta", "phi")
    @classmethod
    def _angle(cls, v):
        return parse_angle(v)


class PopulationsState(StrictModel):
    populations: List[float]


class MatrixFileState(StrictModel):
    matrix_file: str


InitialStateConfig = Union[str, PopulationsState, MatrixFileState]


class SystemConfig(StrictModel):
    spins: List[SpinConfig]
    zeeman: Optional[ZeemanConfig] = None
    j_coupling: Optional[List[List[float]]] = None  # MHz, strictly upper triangular
    initial_state: InitialStateConfig = "canonical"
    temperature: float = settings.DEFAULT_TEMPERATURE  # K


class PulseStepConfig(StrictModel):
    kind: Literal["pulse"]
    polarization: Literal["linear", "sigma+", "sigma-"] = "linear"
    amplitude: float  # T
    frequency: float  # MHz
    phase: Angle = 0.0
    # linear: field axis; circular: normal of the polarization plane
    axis_theta: Optional[Angle] = None
    axis_phi: Angle = 0.0
    duration: Optional[float] = None  # us
    # calibrated duration: rotation `angle` on the |m> <-> |m+1> transition of `site`
    angle: Optional[Angle] = None
    transition_m: Optional[float] = None
    site: int = 0
    label: str = ""

    @field_validator("phase", "axis_theta", "axis_phi", "angle")
    @classmethod
    def _angle(cls, v):
        return None if v is None else parse_angle(v)


class FreeEvolutionStepConfig(StrictModel):
    kind: Literal["free_evolution"]
    duration: float  # us
    label: str = ""


class RotationStepConfig(StrictModel):
    kind: Literal["rotation"]
    site: int = 0
    axis: Literal["x", "y", "z"] = "z"
    angle: Angle
    label: str = ""

    @field_validator("angle")
    @classmethod
    def _angle(cls, v):
        return parse_angle(v)


class PseudopureStepConfig(StrictModel):
    kind: Literal["pseudopure"]
    target: str


class CnotNqrStepConfig(StrictModel):
    kind: Literal["cnot_nqr"]
    amplitude: Optional[float] = None  # T


class CnotNmrStepConfig(StrictModel):
    kind: Literal["cnot_nmr"]
    amplitude: Optional[float] = None  # T


StepConfig = Annotated[
    Union[
        PulseStepConfig, FreeEvolutionStepConfig, RotationStepConfig,
        PseudopureStepConfig, CnotNqrStepConfig, CnotNmrStepConfig,
    ],
    Field(discriminator="kind"),
]


class EvolutionConfig(StrictModel):
    picture: Literal["interaction_H0", "rotating_frame"] = "interaction_H0"
    rrf_frequency: float = 0.0
    rrf_theta: Angle = 0.0
    rrf_phi: Angle = 0.0
    magnus_order: int = settings.DEFAULT_MAGNUS_ORDER
    quadrature_points_per_period: int = settings.DEFAULT_POINTS_PER_PERIOD

    @field_validator("rrf_theta", "rrf_phi")
    @classmethod
    def _angle(cls, v):
        return parse_angle(v)


class AcquisitionConfig(StrictModel):
    acquisition_time: float  # us
    sample_count: Optional[int] = None
    T2: float = settings.DEFAULT_T2  # us
    coil_theta: Angle = 0.0
    coil_phi: Angle = 0.0
    reference_frequency: float = 0.0  # MHz

    @field_validator("coil_theta", "coil_phi")
    @classmethod
    def _angle(cls, v):
        return parse_angle(v)


class TransformConfig(StrictModel):
    frequency_start: float  # MHz
    frequency_stop: float  # MHz
    grid_points: int = settings.DEFAULT_GRID_POINTS
    include_opposite: bool = False


class ExperimentConfig(StrictModel):
    name: str = "experiment"
    description: str = ""
    system: SystemConfig
    sequence: List[StepConfig] = Field(default_factory=list)
    evolution: EvolutionConfig = Field(default_factory=EvolutionConfig)
    acquisition: Optional[AcquisitionConfig] = None
    transform: Optional[TransformConfig] = None

    _source: Optional[Path] = PrivateAttr(default=None)

    @property
    def source_dir(self) -> Path:
        """Directory relative paths inside the config are resolved against"""
        return self._source.parent if self._source else Path.cwd()
