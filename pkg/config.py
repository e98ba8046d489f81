"""
Main configuration for the NMR/NQR spin dynamics simulator
"""
from pathlib import Path
from typing import List
from pydantic import Field
from scipy import constants as sc
try:
    from pydantic_settings import BaseSettings
except ImportError:
    # Fallback for pydantic v1
    from pydantic import BaseSettings

# Paths configuration
BASE_DIR = Path(__file__).parent
CONFIGS_DIR = BASE_DIR / "configs"
STORAGE_DIR = BASE_DIR / "storage"
OUTPUTS_DIR = STORAGE_DIR / "outputs"

# Create directories if they don't exist
for directory in [STORAGE_DIR, OUTPUTS_DIR]:
    directory.mkdir(parents=True, exist_ok=True)


class Settings(BaseSettings):
    """Application settings, overridable through SPINSIM_* environment variables"""

    BASE_DIR: Path = BASE_DIR
    CONFIGS_DIR: Path = CONFIGS_DIR
    STORAGE_DIR: Path = STORAGE_DIR

    # Default target of `simulate` when --out is not given
    OUTPUT_DIR: Path = Field(default=OUTPUTS_DIR)

    LOG_LEVEL: str = Field(default="INFO")

    # Application
    APP_NAME: str = "spinsim"
    APP_VERSION: str = "1.0.0"

    # Artifacts
    FLOAT_FORMAT: str = "%.12g"
    MATRIX_COLUMNS: List[str] = ["row", "col", "re", "im"]
    FID_COLUMNS: List[str] = ["time_us", "re", "im"]
    SPECTRUM_COLUMNS: List[str] = ["freq_MHz", "re", "im", "abs"]

    # Simulation limits and defaults
    MAX_SPIN: float = 4.5
    MAX_DIMENSION: int = 256
    DEFAULT_TEMPERATURE: float = 1e-4  # K
    DEFAULT_T2: float = 100.0  # us
    DEFAULT_MAGNUS_ORDER: int = 2
    DEFAULT_POINTS_PER_PERIOD: int = 100
    DEFAULT_GRID_POINTS: int = 1000

    class Config:
        env_file = ".env"
        env_prefix = "SPINSIM_"
        case_sensitive = False


class PhysicalConstants:
    """Physical constants in the units used across the simulator"""

    PLANCK = sc.h  # J s
    BOLTZMANN = sc.k  # J/K

    # Energy of 1 MHz expressed as a temperature: h * 1e6 / k_B
    MHZ_TO_KELVIN = PLANCK * 1e6 / BOLTZMANN


class NumericalTolerances:
    """Tolerances for the structural checks of matrices"""

    HERMITIAN = 1e-10
    TRACE = 1e-10
    POSITIVITY = 1e-10
    UNITARY = 1e-8
    # Propagators worse than this signal an under-resolved quadrature
    PROPAGATOR_GATE = 1e-6
    # Largest change of the Magnus exponent (rad) when the quadrature density doubles
    MAGNUS_CONVERGENCE = 1e-4


class ProtocolDefaults:
    """Calibration grids and amplitudes of the experiment recipes"""

    # Largest number of candidate durations exponentiated during a duration scan
    SCAN_CANDIDATES = 2001
    # Scan window as a multiple of the perturbative two-photon exchange time
    TWO_PHOTON_WINDOW = 1.6
    SINGLE_PHOTON_AMPLITUDE = 0.01  # T
    TWO_PHOTON_AMPLITUDE = 0.072  # T
    NMR_PULSE_AMPLITUDE = 0.05  # T


settings = Settings()
constants = PhysicalConstants()
tolerances = NumericalTolerances()
protocol_defaults = ProtocolDefaults()
