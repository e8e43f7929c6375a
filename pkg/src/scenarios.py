import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from .config import config, SCHEMA_VERSION, ToleranceConfig
from .cq_model import (
    CIBlock,
    Grid,
    GridDensity,
    StateFamilySpec,
    StructuredCIState,
    family_dim,
    gaussian_density,
    mixture_density,
    point_density,
    uniform_density,
)
from .inequality_suite import random_structured_suite
from .validator import ConfigInvalid, ConfigValidator, config_error

logger = logging.getLogger(__name__)

DEFAULT_T_GRID = [0.5 * i for i in range(21)]
DEFAULT_T_LIST = [10.0, 100.0, 1000.0]


@dataclass
class AxisSpec:
    lo: float
    hi: float
    points: int

    def to_dict(self) -> Dict:
        return {"lo": self.lo, "hi": self.hi, "points": self.points}

    @classmethod
    def from_dict(cls, data: Dict) -> "AxisSpec":
        return cls(lo=float(data['lo']), hi=float(data['hi']), points=int(data['points']))

    def to_grid(self) -> Grid:
        return Grid.line(self.lo, self.hi, self.points)

    @classmethod
    def default(cls) -> "AxisSpec":
        return cls(lo=config.grid.lo, hi=config.grid.hi, points=config.grid.joint_points)


@dataclass
class DensitySpec:
    """Classical density: gaussian(mean, variance), uniform(lo, hi), point(at) or mixture(weights, components)."""
    kind: str
    params: Dict = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {"kind": self.kind, **self.params}

    @classmethod
    def from_dict(cls, data: Dict) -> "DensitySpec":
        params = {k: v for k, v in data.items() if k != 'kind'}
        return cls(kind=data['kind'], params=params)


@dataclass
class FamilySpec:
    name: str
    params: Dict = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {"name": self.name, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, data: Dict) -> "FamilySpec":
        return cls(name=data['name'], params=dict(data.get('params') or {}))

    def to_family(self) -> StateFamilySpec:
        return StateFamilySpec(self.name, dict(self.params))


@dataclass
class BlockSpec:
    weight: float
    density_x: DensitySpec
    density_y: DensitySpec
    family_x: FamilySpec
    family_y: FamilySpec

    def to_dict(self) -> Dict:
        return {
            "weight": self.weight,
            "density_x": self.density_x.to_dict(),
            "density_y": self.density_y.to_dict(),
            "family_x": self.family_x.to_dict(),
            "family_y": self.family_y.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "BlockSpec":
        return cls(
            weight=float(data['weight']),
            density_x=DensitySpec.from_dict(data['density_x']),
            density_y=DensitySpec.from_dict(data['density_y']),
            family_x=FamilySpec.from_dict(data['family_x']),
            family_y=FamilySpec.from_dict(data['family_y']),
        )


@dataclass
class CheckSpec:
    name: str
    params: Dict = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {"name": self.name, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, data: Dict) -> "CheckSpec":
        return cls(name=data['name'], params=dict(data.get('params') or {}))

    def lambdas(self, default: List[float]) -> List[float]:
        if 'lambdas' in self.params:
            return [float(v) for v in self.params['lambdas']]
        if 'lambda' in self.params:
            return [float(self.params['lambda'])]
        return default

    def times(self, key: str, default: List[float]) -> List[float]:
        return [float(t) for t in self.params.get(key, default)]


@dataclass
class SuiteSpec:
    draws: int

    def to_dict(self) -> Dict:
        return {"draws": self.draws}

    @classmethod
    def from_dict(cls, data: Dict) -> "SuiteSpec":
        return cls(draws=int(data.get('draws', config.suite.draws)))


@dataclass
class ScenarioConfig:
    name: str
    grid_x: AxisSpec
    grid_y: AxisSpec
    checks: List[CheckSpec]
    blocks: List[BlockSpec] = field(default_factory=list)
    suite: Optional[SuiteSpec] = None
    tolerances: Dict[str, float] = field(default_factory=dict)
    seed: Optional[int] = None
    description: str = ""
    schema_version: int = SCHEMA_VERSION

    @property
    def effective_seed(self) -> int:
        return config.suite.seed if self.seed is None else self.seed

    @property
    def dim(self) -> Optional[int]:
        """Dimension of M, or None for random suites."""
        if self.suite is not None:
            return None
        return sum(family_dim(b.family_x.to_family()) * family_dim(b.family_y.to_family()) for b in self.blocks)

    def tolerance_config(self) -> ToleranceConfig:
        return replace(config.tolerance, **{k: float(v) for k, v in self.tolerances.items()})

    def to_dict(self) -> Dict:
        return {
            "schema_version": self.schema_version,
            "name": self.name,
            "description": self.description,
            "seed": self.seed,
            "grid": {"x": self.grid_x.to_dict(), "y": self.grid_y.to_dict()},
            "blocks": [b.to_dict() for b in self.blocks],
            "suite": self.suite.to_dict() if self.suite else None,
            "checks": [c.to_dict() for c in self.checks],
            "tolerances": dict(self.tolerances),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "ScenarioConfig":
        result = ConfigValidator(config.grid.min_points).validate_scenario(data)
        if not result.is_valid:
            raise ConfigInvalid(result.errors)
        return cls(
            name=data['name'],
            grid_x=AxisSpec.from_dict(data['grid']['x']) if data.get('grid') else AxisSpec.default(),
            grid_y=AxisSpec.from_dict(data['grid']['y']) if data.get('grid') else AxisSpec.default(),
            checks=[CheckSpec.from_dict(c) for c in data['checks']],
            blocks=[BlockSpec.from_dict(b) for b in data.get('blocks') or []],
            suite=SuiteSpec.from_dict(data['suite']) if data.get('suite') is not None else None,
            tolerances={k: float(v) for k, v in (data.get('tolerances') or {}).items()},
            seed=data.get('seed'),
            description=data.get('description', ""),
            schema_version=data['schema_version'],
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise config_error("", f"not valid JSON: {e}")
        return cls.from_dict(data)

    def with_overrides(
            self,
            grid_points: int = None,
            tolerances: Dict[str, float] = None,
            seed: int = None
    ) -> "ScenarioConfig":
        """Copy with CLI overrides applied; the result is re-validated."""
        data = self.to_dict()
        if grid_points is not None:
            data['grid']['x']['points'] = grid_points
            data['grid']['y']['points'] = grid_points
        if tolerances:
            data['tolerances'].update(tolerances)
        if seed is not None:
            data['seed'] = seed
        return ScenarioConfig.from_dict(data)


def density_from_spec(spec: DensitySpec, grid: Grid) -> GridDensity:
    params = spec.params
    if spec.kind == 'gaussian':
        return gaussian_density(float(params['mean']), float(params['variance']), grid)
    if spec.kind == 'uniform':
        return uniform_density(float(params['lo']), float(params['hi']), grid)
    if spec.kind == 'point':
        return point_density(float(params['at']), grid)
    components = [density_from_spec(DensitySpec.from_dict(c), grid) for c in params['components']]
    return mixture_density(params['weights'], components)


def build_structured_state(scenario: ScenarioConfig) -> StructuredCIState:
    grid_x, grid_y = scenario.grid_x.to_grid(), scenario.grid_y.to_grid()
    return StructuredCIState([
        CIBlock(
            weight=b.weight,
            density_x=density_from_spec(b.density_x, grid_x),
            density_y=density_from_spec(b.density_y, grid_y),
            family_x=b.family_x.to_family(),
            family_y=b.family_y.to_family(),
        )
        for b in scenario.blocks
    ])


def build_states(scenario: ScenarioConfig) -> List[Tuple[str, StructuredCIState]]:
    """Labelled structured states: one per scenario, or one per suite draw."""
    if scenario.suite is None:
        return [(scenario.name, build_structured_state(scenario))]
    draws = random_structured_suite(
        scenario.effective_seed, scenario.suite.draws, scenario.grid_x.to_grid(), scenario.grid_y.to_grid()
    )
    return [(f"{scenario.name}/draw-{i:03d}", s) for i, s in enumerate(draws)]


def load_scenario(source: Union[str, Path]) -> ScenarioConfig:
    """Load a scenario from a JSON path or a bundled scenario name."""
    path = Path(source)
    if not path.exists():
        bundled = config.paths.scenarios_dir / f"{source}.json"
        if not bundled.exists():
            raise config_error("name", f"no scenario file or bundled scenario named '{source}'", source)
        path = bundled
    logger.debug("loading scenario from %s", path)
    return ScenarioConfig.from_json(path.read_text(encoding='utf-8'))


def list_scenarios() -> List[Dict[str, str]]:
    listing = []
    for path in sorted(config.paths.scenarios_dir.glob('*.json')):
        data = json.loads(path.read_text(encoding='utf-8'))
        listing.append({"name": data.get('name', path.stem), "description": data.get('description', "")})
    return listing
