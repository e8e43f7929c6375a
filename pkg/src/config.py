import os
from pathlib import Path
from dataclasses import dataclass
from typing import Tuple
from dotenv import load_dotenv

load_dotenv()

SCHEMA_VERSION = 1


@dataclass
class GridConfig:
    lo: float = float(os.getenv("EPIQ_GRID_LO", "-10.0"))
    hi: float = float(os.getenv("EPIQ_GRID_HI", "10.0"))
    joint_points: int = int(os.getenv("EPIQ_JOINT_GRID_POINTS", "256"))
    min_points: int = 16
    # narrowest Gaussian (in grid spacings) the quadrature is trusted for
    min_sigma_cells: float = 4.0
    coverage_sigmas: float = 6.0


@dataclass
class ToleranceConfig:
    hermitian: float = 1e-12
    positive: float = 1e-10
    trace: float = 1e-10
    eig_clamp: float = 1e-12
    probability: float = 1e-12
    mass: float = 1e-8
    zero_mass: float = 1e-300
    ci: float = 1e-6
    entropic: float = 1e-3
    fisher_relative: float = 0.02
    concavity: float = 1e-4
    chain: float = 1e-4
    vanishing: float = 1e-8
    slope: float = 1e-4
    asymptotic: float = 5e-3
    consistency: float = 1e-6
    entropy_warning: float = 50.0


@dataclass
class HeatConfig:
    pad_factor: float = 6.0
    kernel_truncation: float = 8.0
    max_kernel_halfwidth: int = 1024
    max_axis_points: int = 8192
    # after decimation the spacing must stay below sqrt(elapsed t) / this
    decimation_sigma_cells: float = 8.0


@dataclass
class FisherConfig:
    schedule_fractions: Tuple[float, ...] = (1e-2, 5e-3, 2.5e-3)
    schedule_floor: float = 1e-4
    min_kernel_cells: float = 1.0


@dataclass
class SuiteConfig:
    seed: int = int(os.getenv("EPIQ_SEED", "20190101"))
    draws: int = int(os.getenv("EPIQ_SUITE_DRAWS", "50"))
    bloch_alpha: Tuple[float, float] = (0.5, 2.0)
    bloch_beta: Tuple[float, float] = (0.5, 2.0)
    bloch_mu: Tuple[float, float] = (0.0, 0.5)
    mean_range: Tuple[float, float] = (-1.0, 1.0)
    variance_range: Tuple[float, float] = (0.5, 2.0)


@dataclass
class LoggingConfig:
    level: str = os.getenv("EPIQ_LOG_LEVEL", "WARNING")
    format: str = "%(asctime)s %(levelname)s %(name)s: %(message)s"


@dataclass
class PathsConfig:
    base_dir: Path = Path(__file__).parent.parent
    output_dir: Path = None
    scenarios_dir: Path = None

    def __post_init__(self):
        self.output_dir = Path(os.getenv("EPIQ_OUTPUT_DIR", str(self.base_dir / "output")))
        self.scenarios_dir = self.base_dir / "scenarios"

    def ensure_output_dir(self) -> Path:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self.output_dir


@dataclass
class Config:
    grid: GridConfig = None
    tolerance: ToleranceConfig = None
    heat: HeatConfig = None
    fisher: FisherConfig = None
    suite: SuiteConfig = None
    logging: LoggingConfig = None
    paths: PathsConfig = None

    def __post_init__(self):
        self.grid = GridConfig()
        self.tolerance = ToleranceConfig()
        self.heat = HeatConfig()
        self.fisher = FisherConfig()
        self.suite = SuiteConfig()
        self.logging = LoggingConfig()
        self.paths = PathsConfig()


config = Config()
