import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence, Tuple, Union

import numpy as np
from scipy import stats
from scipy.interpolate import interp1d
from scipy.special import expit, softmax

from .config import config
from .quantum_core import (
    BlockStructure,
    DensityMatrix,
    check_probability_vector,
    direct_sum_grid,
    tensor_grid,
    trace_norm_distance,
    validate,
    validate_states,
)
from .validator import (
    CovarianceNotSPD,
    DimensionMismatch,
    GridTooCoarse,
    IncompatibleGrids,
    InvalidParameters,
    NotAProbabilityTable,
    UnknownFamily,
)

logger = logging.getLogger(__name__)

STATE_FAMILIES = ("constant", "diagonal_classical", "qubit_bloch")


@dataclass(frozen=True)
class Axis:
    lo: float
    hi: float
    points: int

    def __post_init__(self):
        if int(self.points) < config.grid.min_points:
            raise GridTooCoarse(
                f"axis needs at least {config.grid.min_points} points, got {self.points}",
                field="points", raw_value=self.points
            )
        if not self.hi > self.lo:
            raise InvalidParameters(
                f"axis upper bound {self.hi} must exceed lower bound {self.lo}", field="hi", raw_value=self.hi
            )
        object.__setattr__(self, "points", int(self.points))

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.points - 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.lo + self.spacing * np.arange(self.points)

    def extended(self, cells: int) -> "Axis":
        if cells <= 0:
            return self
        h = self.spacing
        return Axis(self.lo - cells * h, self.hi + cells * h, self.points + 2 * cells)

    def decimated(self) -> "Axis":
        points = (self.points - 1) // 2 + 1
        return Axis(self.lo, self.lo + 2 * self.spacing * (points - 1), points)

    def offset_in(self, other: "Axis") -> int:
        """Index of this axis' first node on the lattice of ``other``."""
        h = other.spacing
        if abs(self.spacing - h) > 1e-9 * h:
            raise IncompatibleGrids(
                f"spacings differ ({self.spacing:.6g} vs {h:.6g})", field="spacing", raw_value=self.spacing
            )
        shift = (self.lo - other.lo) / h
        offset = int(round(shift))
        if abs(shift - offset) > 1e-6:
            raise IncompatibleGrids(
                f"axes are not on a common lattice (offset {shift:.6f} cells)", field="lo", raw_value=self.lo
            )
        return offset

    def matches(self, other: "Axis") -> bool:
        scale = max(1.0, abs(self.lo), abs(self.hi))
        return (self.points == other.points
                and abs(self.lo - other.lo) <= 1e-12 * scale
                and abs(self.hi - other.hi) <= 1e-12 * scale)


@dataclass(frozen=True)
class Grid:
    axes: Tuple[Axis, ...]

    def __post_init__(self):
        axes = tuple(self.axes)
        if len(axes) not in (1, 2):
            raise DimensionMismatch(f"grids must have 1 or 2 axes, got {len(axes)}", field="axes")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def line(cls, lo: float, hi: float, points: int) -> "Grid":
        return cls((Axis(lo, hi, points),))

    @classmethod
    def product(cls, grid_x: "Grid", grid_y: "Grid") -> "Grid":
        return cls(grid_x.axes + grid_y.axes)

    @property
    def n(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(a.points for a in self.axes)

    @property
    def spacings(self) -> Tuple[float, ...]:
        return tuple(a.spacing for a in self.axes)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacings))

    def axis_grid(self, index: int) -> "Grid":
        return Grid((self.axes[index],))

    def replace_axis(self, index: int, axis: Axis) -> "Grid":
        axes = list(self.axes)
        axes[index] = axis
        return Grid(tuple(axes))

    def mesh(self) -> np.ndarray:
        nodes = np.meshgrid(*[a.nodes for a in self.axes], indexing='ij')
        return np.stack(nodes, axis=-1)

    def matches(self, other: "Grid") -> bool:
        return self.n == other.n and all(a.matches(b) for a, b in zip(self.axes, other.axes))

    def to_dict(self) -> Dict:
        return {
            f"axis_{i}": {"lo": a.lo, "hi": a.hi, "points": a.points, "spacing": a.spacing}
            for i, a in enumerate(self.axes)
        }


def normalize_values(values: np.ndarray, grid: Grid) -> np.ndarray:
    total = values.sum() * grid.cell_volume
    if not total > 0:
        raise InvalidParameters("density has no mass on the grid", field="values", raw_value=total)
    return values / total


@dataclass(frozen=True, eq=False)
class GridDensity:
    grid: Grid
    values: np.ndarray
    coverage_warning: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise DimensionMismatch(
                f"density values have shape {values.shape}, grid has {self.grid.shape}",
                field="values", raw_value=values.shape
            )
        if values.min() < 0.0:
            raise InvalidParameters(
                f"density has negative values (min {values.min():.3e})", field="values", raw_value=values.min()
            )
        mass = values.sum() * self.grid.cell_volume
        if abs(mass - 1.0) > config.tolerance.mass:
            raise InvalidParameters(
                f"density mass {mass:.12f} differs from 1 by more than {config.tolerance.mass:.0e}",
                field="values", raw_value=mass
            )
        object.__setattr__(self, "values", values)

    def mass(self) -> float:
        return float(self.values.sum() * self.grid.cell_volume)

    def nodes(self) -> np.ndarray:
        return self.grid.axes[0].nodes

    def mean(self) -> np.ndarray:
        weights = self.values * self.grid.cell_volume
        return np.array([(weights * self.grid.mesh()[..., i]).sum() for i in range(self.grid.n)])

    def variance(self) -> np.ndarray:
        """Per-axis variances."""
        weights = self.values * self.grid.cell_volume
        mesh = self.grid.mesh()
        mu = self.mean()
        return np.array([(weights * (mesh[..., i] - mu[i]) ** 2).sum() for i in range(self.grid.n)])

    def values_on(self, grid: Grid) -> np.ndarray:
        """Values on another grid of the same lattice, zero outside this density's grid."""
        if grid.n != self.grid.n:
            raise DimensionMismatch("grids differ in dimension", field="grid")
        out = np.zeros(grid.shape)
        src, dst = [], []
        for own, target in zip(self.grid.axes, grid.axes):
            offset = target.offset_in(own)
            start = max(0, -offset)
            stop = min(target.points, own.points - offset)
            if stop <= start:
                return out
            dst.append(slice(start, stop))
            src.append(slice(start + offset, stop + offset))
        out[tuple(dst)] = self.values[tuple(src)]
        return out


def conditional_split(
        grid: Grid,
        values: np.ndarray,
        weighted: np.ndarray,
        coverage_warning: bool = False
) -> Tuple[GridDensity, np.ndarray, np.ndarray]:
    # weighted = p * rho; renormalizing both leaves the conditional states untouched
    total = values.sum() * grid.cell_volume
    values = values / total
    weighted = weighted / total
    mask = values < config.tolerance.zero_mass
    safe = np.where(mask, 1.0, values)
    states = weighted / safe[..., None, None]
    dim = weighted.shape[-1]
    if mask.any():
        states[mask] = np.eye(dim) / dim
        logger.debug("flagged %d zero-mass grid points as maximally mixed", int(mask.sum()))
    return GridDensity(grid, values, coverage_warning), states, mask


@dataclass(frozen=True, eq=False)
class CQState:
    density: GridDensity
    states: np.ndarray
    zero_mask: np.ndarray = None

    def __post_init__(self):
        states = np.asarray(self.states, dtype=complex)
        expected = self.density.grid.shape
        if states.shape[:-2] != expected or states.shape[-1] != states.shape[-2]:
            raise DimensionMismatch(
                f"states have shape {states.shape}, expected {expected} + (d, d)",
                field="states", raw_value=states.shape
            )
        object.__setattr__(self, "states", states)
        if self.zero_mask is None:
            object.__setattr__(self, "zero_mask", self.density.values < config.tolerance.zero_mass)

    @property
    def grid(self) -> Grid:
        return self.density.grid

    @property
    def dim(self) -> int:
        return self.states.shape[-1]

    def weighted_states(self) -> np.ndarray:
        return self.density.values[..., None, None] * self.states


@dataclass(frozen=True, eq=False)
class CCQState:
    joint: GridDensity
    states: np.ndarray
    zero_mask: np.ndarray = None

    def __post_init__(self):
        if self.joint.grid.n != 2:
            raise DimensionMismatch("a CCQ state needs a two-axis joint grid", field="joint")
        states = np.asarray(self.states, dtype=complex)
        expected = self.joint.grid.shape
        if states.shape[:-2] != expected or states.shape[-1] != states.shape[-2]:
            raise DimensionMismatch(
                f"states have shape {states.shape}, expected {expected} + (d, d)",
                field="states", raw_value=states.shape
            )
        object.__setattr__(self, "states", states)
        if self.zero_mask is None:
            object.__setattr__(self, "zero_mask", self.joint.values < config.tolerance.zero_mass)

    @property
    def density(self) -> GridDensity:
        return self.joint

    @property
    def grid(self) -> Grid:
        return self.joint.grid

    @property
    def grid_x(self) -> Grid:
        return self.joint.grid.axis_grid(0)

    @property
    def grid_y(self) -> Grid:
        return self.joint.grid.axis_grid(1)

    @property
    def dim(self) -> int:
        return self.states.shape[-1]

    def weighted_states(self) -> np.ndarray:
        return self.joint.values[..., None, None] * self.states


@dataclass
class StateFamilySpec:
    name: str
    params: Dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class StateMap:
    """Sampled map x -> rho(x) of a declared family on a one-axis grid."""
    family: StateFamilySpec
    grid: Grid
    states: np.ndarray
    lipschitz: float
    max_jump: float

    @property
    def dim(self) -> int:
        return self.states.shape[-1]


def _param(params: Dict, name: str, default: float) -> float:
    value = params.get(name, default)
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidParameters(f"parameter '{name}' must be a number", field=name, raw_value=value)
    if not np.isfinite(value):
        raise InvalidParameters(f"parameter '{name}' must be finite", field=name, raw_value=value)
    return value


def _diagonal_stack(table: np.ndarray) -> np.ndarray:
    dim, points = table.shape
    states = np.zeros((points, dim, dim), dtype=complex)
    idx = np.arange(dim)
    states[:, idx, idx] = table.T
    return states


def _constant_states(params: Dict, x: np.ndarray) -> Tuple[np.ndarray, float]:
    if params.get('state') is not None:
        rho = validate(np.asarray(params['state'], dtype=complex)).entries
    elif params.get('diag') is not None:
        rho = validate(np.diag(np.asarray(params['diag'], dtype=complex))).entries
    else:
        dim = int(params.get('dim', 1))
        if dim < 1:
            raise InvalidParameters("constant family needs dim >= 1", field="dim", raw_value=dim)
        rho = np.eye(dim, dtype=complex) / dim
    return np.broadcast_to(rho, (x.size,) + rho.shape).copy(), 0.0


def _diagonal_classical_states(params: Dict, x: np.ndarray) -> Tuple[np.ndarray, float]:
    if 'slope' in params:
        slope = _param(params, 'slope', 1.0)
        offset = _param(params, 'offset', 0.0)
        first = expit(slope * x + offset)
        table = np.stack([first, 1.0 - first])
        return _diagonal_stack(table), abs(slope) / 2.0
    if 'slopes' in params:
        slopes = np.asarray(params['slopes'], dtype=float)
        offsets = np.asarray(params.get('offsets', np.zeros_like(slopes)), dtype=float)
        if slopes.ndim != 1 or slopes.size < 2 or offsets.shape != slopes.shape:
            raise InvalidParameters(
                "softmax family needs matching 'slopes' and 'offsets' vectors with >= 2 entries",
                field="slopes", raw_value=params['slopes']
            )
        table = softmax(np.outer(slopes, x) + offsets[:, None], axis=0)
        return _diagonal_stack(table), float(slopes.max() - slopes.min())
    raise InvalidParameters(
        "diagonal_classical needs 'slope' (logistic) or 'slopes' (softmax)", field="params", raw_value=params
    )


def _qubit_bloch_states(params: Dict, x: np.ndarray) -> Tuple[np.ndarray, float]:
    alpha = _param(params, 'alpha', 1.0)
    beta = _param(params, 'beta', 1.0)
    gamma = _param(params, 'gamma', 0.0)
    mu = _param(params, 'mu', 0.0)
    profile = params.get('profile', 'arctan')
    if not 0.0 <= mu < 1.0:
        raise InvalidParameters(f"mixedness mu must lie in [0, 1), got {mu}", field="mu", raw_value=mu)
    if profile == 'arctan':
        theta = alpha * np.arctan(beta * x) + gamma
        lipschitz = (1.0 - mu) * abs(alpha * beta)
    elif profile == 'linear':
        theta = alpha * x + gamma
        lipschitz = (1.0 - mu) * abs(alpha)
    else:
        raise InvalidParameters(
            f"unknown qubit_bloch profile '{profile}' (use 'arctan' or 'linear')", field="profile", raw_value=profile
        )
    r = 1.0 - mu
    rx, rz = r * np.sin(theta), r * np.cos(theta)
    states = np.empty((x.size, 2, 2), dtype=complex)
    states[:, 0, 0] = 0.5 * (1.0 + rz)
    states[:, 1, 1] = 0.5 * (1.0 - rz)
    states[:, 0, 1] = 0.5 * rx
    states[:, 1, 0] = 0.5 * rx
    return states, lipschitz


FAMILY_BUILDERS: Dict[str, Callable[[Dict, np.ndarray], Tuple[np.ndarray, float]]] = {
    'constant': _constant_states,
    'diagonal_classical': _diagonal_classical_states,
    'qubit_bloch': _qubit_bloch_states,
}


def family_dim(family: StateFamilySpec) -> int:
    if family.name not in FAMILY_BUILDERS:
        raise UnknownFamily(
            f"unknown state family '{family.name}' (declared: {', '.join(STATE_FAMILIES)})",
            field="name", raw_value=family.name
        )
    params = family.params or {}
    if family.name == 'qubit_bloch':
        return 2
    if family.name == 'diagonal_classical':
        return len(params['slopes']) if 'slopes' in params else 2
    if params.get('state') is not None:
        return len(params['state'])
    if params.get('diag') is not None:
        return len(params['diag'])
    return int(params.get('dim', 1))


def trace_distance_profile(states: np.ndarray, spacing: float) -> float:
    if states.shape[0] < 2:
        return 0.0
    return float(trace_norm_distance(states[1:], states[:-1]).max() / spacing)


def state_map(family: StateFamilySpec, grid: Grid) -> StateMap:
    if grid.n != 1:
        raise DimensionMismatch("state maps are sampled on one-axis grids", field="grid")
    builder = FAMILY_BUILDERS.get(family.name)
    if builder is None:
        raise UnknownFamily(
            f"unknown state family '{family.name}' (declared: {', '.join(STATE_FAMILIES)})",
            field="name", raw_value=family.name
        )
    axis = grid.axes[0]
    states, lipschitz = builder(family.params or {}, axis.nodes)
    states = validate_states(states)

    max_jump = trace_distance_profile(states, axis.spacing)
    if max_jump * axis.spacing > lipschitz * axis.spacing * (1.0 + 1e-9) + 1e-12:
        raise InvalidParameters(
            f"family '{family.name}' jumps by {max_jump:.4g}*h between neighbours, "
            f"above its continuity constant {lipschitz:.4g}",
            field="params", raw_value=max_jump
        )
    return StateMap(family=family, grid=grid, states=states, lipschitz=lipschitz, max_jump=max_jump)


def gaussian_density(
        mean: Union[float, Sequence[float]],
        covariance: Union[float, Sequence[Sequence[float]]],
        grid: Grid
) -> GridDensity:
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(covariance, dtype=float))
    if mean.shape != (grid.n,) or cov.shape != (grid.n, grid.n):
        raise DimensionMismatch(
            f"mean {mean.shape} / covariance {cov.shape} do not fit a {grid.n}-axis grid", field="mean"
        )
    if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12):
        raise CovarianceNotSPD("covariance is not symmetric", field="covariance", raw_value=cov.tolist())
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise CovarianceNotSPD(
            f"covariance is not positive definite (eigenvalues {np.linalg.eigvalsh(cov)})",
            field="covariance", raw_value=cov.tolist()
        )

    sigmas = np.sqrt(np.diag(cov))
    coverage_warning = False
    for axis, mu, sigma in zip(grid.axes, mean, sigmas):
        if sigma < config.grid.min_sigma_cells * axis.spacing:
            raise GridTooCoarse(
                f"sigma {sigma:.4g} is below {config.grid.min_sigma_cells:g} grid spacings ({axis.spacing:.4g})",
                field="covariance", raw_value=sigma
            )
        reach = config.grid.coverage_sigmas * sigma
        if mu - reach < axis.lo or mu + reach > axis.hi:
            coverage_warning = True
            logger.warning(
                "grid [%.3g, %.3g] does not cover mean %.3g +/- %g sigma", axis.lo, axis.hi, mu,
                config.grid.coverage_sigmas
            )

    values = stats.multivariate_normal(mean=mean, cov=cov).pdf(grid.mesh())
    values = np.asarray(values, dtype=float).reshape(grid.shape)
    return GridDensity(grid, normalize_values(values, grid), coverage_warning)


def uniform_density(lo: float, hi: float, grid: Grid) -> GridDensity:
    """Uniform law on [lo, hi] from exact overlaps with the grid cells."""
    if grid.n != 1:
        raise DimensionMismatch("uniform densities are built on one-axis grids", field="grid")
    if not hi > lo:
        raise InvalidParameters(f"uniform upper bound {hi} must exceed {lo}", field="hi", raw_value=hi)
    axis = grid.axes[0]
    x, h = axis.nodes, axis.spacing
    overlap = np.clip(np.minimum(x + h / 2, hi) - np.maximum(x - h / 2, lo), 0.0, None)
    if overlap.sum() <= 0.0:
        raise InvalidParameters(f"uniform support [{lo}, {hi}] misses the grid", field="lo", raw_value=lo)
    coverage_warning = lo < axis.lo - h / 2 or hi > axis.hi + h / 2
    return GridDensity(grid, normalize_values(overlap, grid), coverage_warning)


def point_density(at: float, grid: Grid) -> GridDensity:
    """All mass in the grid cell nearest to ``at``."""
    if grid.n != 1:
        raise DimensionMismatch("point densities are built on one-axis grids", field="grid")
    axis = grid.axes[0]
    index = int(round((at - axis.lo) / axis.spacing))
    if not 0 <= index < axis.points:
        raise InvalidParameters(f"point {at} lies outside the grid", field="at", raw_value=at)
    values = np.zeros(axis.points)
    values[index] = 1.0 / axis.spacing
    return GridDensity(grid, values)


def mixture_density(weights: Sequence[float], components: List[GridDensity]) -> GridDensity:
    weights = check_probability_vector(weights)
    if len(weights) != len(components) or not components:
        raise DimensionMismatch("mixture needs one component per weight", field="components")
    grid = components[0].grid
    for component in components[1:]:
        if not component.grid.matches(grid):
            raise DimensionMismatch("mixture components live on different grids", field="components")
    values = sum(w * c.values for w, c in zip(weights, components))
    return GridDensity(grid, normalize_values(values, grid), any(c.coverage_warning for c in components))


def make_ccq(
        joint: GridDensity,
        states: Union[np.ndarray, Callable[[float, float], np.ndarray]]
) -> CCQState:
    if joint.grid.n != 2:
        raise DimensionMismatch("make_ccq needs a two-axis joint density", field="joint")
    if callable(states):
        xs, ys = joint.grid.axes[0].nodes, joint.grid.axes[1].nodes
        states = np.array([[np.asarray(states(x, y), dtype=complex) for y in ys] for x in xs])
    states = validate_states(states)
    if states.shape[:-2] != joint.grid.shape:
        raise DimensionMismatch(
            f"state map covers {states.shape[:-2]} points, joint grid has {joint.grid.shape}", field="states"
        )
    mask = joint.values < config.tolerance.zero_mass
    if mask.any():
        dim = states.shape[-1]
        states = states.copy()
        states[mask] = np.eye(dim) / dim
    return CCQState(joint, states, mask)


@dataclass
class CIBlock:
    weight: float
    density_x: GridDensity
    density_y: GridDensity
    family_x: StateFamilySpec
    family_y: StateFamilySpec

    @property
    def dims(self) -> Tuple[int, int]:
        return family_dim(self.family_x), family_dim(self.family_y)


@dataclass
class StructuredCIState:
    """Direct sum over blocks of product densities and product state maps."""
    blocks: List[CIBlock]

    def __post_init__(self):
        if not self.blocks:
            raise DimensionMismatch("structured state needs at least one block", field="blocks")
        check_probability_vector(self.weights)
        first = self.blocks[0]
        for block in self.blocks[1:]:
            if not (block.density_x.grid.matches(first.density_x.grid)
                    and block.density_y.grid.matches(first.density_y.grid)):
                raise DimensionMismatch("block densities live on different grids", field="blocks")

    @property
    def weights(self) -> np.ndarray:
        return np.array([b.weight for b in self.blocks], dtype=float)

    @property
    def structure(self) -> BlockStructure:
        return BlockStructure(tuple(b.dims for b in self.blocks))

    @property
    def grid_x(self) -> Grid:
        return self.blocks[0].density_x.grid

    @property
    def grid_y(self) -> Grid:
        return self.blocks[0].density_y.grid


def realize(s: StructuredCIState, grid_x: Grid = None, grid_y: Grid = None) -> CCQState:
    grid_x = grid_x or s.grid_x
    grid_y = grid_y or s.grid_y
    joint = np.zeros(grid_x.shape + grid_y.shape)
    numerators = []
    for i, block in enumerate(s.blocks):
        if not block.density_x.grid.matches(grid_x) or not block.density_y.grid.matches(grid_y):
            raise DimensionMismatch(f"block {i} densities are not sampled on the requested grids",
                                    field=f"blocks[{i}]")
        rho_x = state_map(block.family_x, grid_x).states
        rho_y = state_map(block.family_y, grid_y).states
        mass = block.weight * np.outer(block.density_x.values, block.density_y.values)
        joint += mass
        numerators.append(mass[..., None, None] * tensor_grid(rho_x, rho_y))

    coverage = any(b.density_x.coverage_warning or b.density_y.coverage_warning for b in s.blocks)
    density, states, mask = conditional_split(
        Grid.product(grid_x, grid_y), joint, direct_sum_grid(numerators), coverage
    )
    if mask.any():
        logger.info("realize: %d joint points below zero-mass threshold", int(mask.sum()))
    return CCQState(density, states, mask)


def marginal_x(s: CCQState) -> CQState:
    hy = s.grid_y.axes[0].spacing
    values = s.joint.values.sum(axis=1) * hy
    weighted = np.einsum('xy,xyij->xij', s.joint.values * hy, s.states)
    density, states, mask = conditional_split(s.grid_x, values, weighted, s.joint.coverage_warning)
    return CQState(density, states, mask)


def marginal_y(s: CCQState) -> CQState:
    hx = s.grid_x.axes[0].spacing
    values = s.joint.values.sum(axis=0) * hx
    weighted = np.einsum('xy,xyij->yij', s.joint.values * hx, s.states)
    density, states, mask = conditional_split(s.grid_y, values, weighted, s.joint.coverage_warning)
    return CQState(density, states, mask)


def _interp_along(nodes: np.ndarray, values: np.ndarray, new_nodes: np.ndarray, axis: int) -> np.ndarray:
    def linear(part):
        return interp1d(nodes, part, axis=axis, bounds_error=False, fill_value=0.0)(new_nodes)

    if np.iscomplexobj(values):
        return linear(values.real) + 1j * linear(values.imag)
    return linear(values)


def _resample_y(
        axis_y: Axis,
        spacing: float,
        values: np.ndarray,
        weighted: np.ndarray
) -> Tuple[Axis, np.ndarray, np.ndarray]:
    points = int(np.floor((axis_y.hi - axis_y.lo) / spacing + 1e-9)) + 1
    if points < config.grid.min_points:
        raise IncompatibleGrids(
            f"resampling Y to spacing {spacing:.4g} leaves {points} points (< {config.grid.min_points})",
            field="grid_y", raw_value=points
        )
    new_axis = Axis(axis_y.lo, axis_y.lo + spacing * (points - 1), points)
    logger.warning("resampling Y from spacing %.4g to %.4g for the sum lattice", axis_y.spacing, spacing)
    values = np.clip(_interp_along(axis_y.nodes, values, new_axis.nodes, axis=1), 0.0, None)
    weighted = _interp_along(axis_y.nodes, weighted, new_axis.nodes, axis=1)
    return new_axis, values, weighted


def sum_pushforward(s: CCQState) -> CQState:
    """Law of X+Y together with the states of M conditioned on X+Y."""
    axis_x, axis_y = s.grid_x.axes[0], s.grid_y.axes[0]
    values = s.joint.values
    weighted = s.weighted_states()
    if abs(axis_x.spacing - axis_y.spacing) > 1e-9 * axis_x.spacing:
        axis_y, values, weighted = _resample_y(axis_y, axis_x.spacing, values, weighted)

    gx, gy = values.shape
    h = axis_x.spacing
    size = gx + gy - 1
    lo = axis_x.lo + axis_y.lo
    out_axis = Axis(lo, lo + h * (size - 1), size)

    p_sum = np.zeros(size)
    w_sum = np.zeros((size,) + weighted.shape[-2:], dtype=complex)
    for i in range(gx):
        p_sum[i:i + gy] += values[i]
        w_sum[i:i + gy] += weighted[i]

    density, states, mask = conditional_split(Grid((out_axis,)), p_sum * h, w_sum * h, s.joint.coverage_warning)
    return CQState(density, states, mask)


def average_state(s: Union[CQState, CCQState]) -> DensityMatrix:
    weights = s.density.values * s.density.grid.cell_volume
    average = np.tensordot(weights, s.states, axes=weights.ndim)
    return validate(average)


def embed_classical(q: np.ndarray, p: GridDensity) -> CQState:
    """Diagonal embedding of a conditional table q[m, x] as a CQ state."""
    table = np.asarray(q, dtype=float)
    if table.ndim != 2:
        raise NotAProbabilityTable(f"table must be 2-D (d, G), got shape {table.shape}", field="q")
    if p.grid.n != 1 or table.shape[1] != p.grid.shape[0]:
        raise DimensionMismatch(
            f"table has {table.shape[1]} columns, grid has {p.grid.shape}", field="q", raw_value=table.shape
        )
    tol = config.tolerance.probability
    column_error = np.abs(table.sum(axis=0) - 1.0).max()
    if table.min() < -tol or column_error > 1e-9:
        raise NotAProbabilityTable(
            f"columns must be probability vectors (min {table.min():.3e}, max column error {column_error:.3e})",
            field="q", raw_value=float(column_error)
        )
    return CQState(p, _diagonal_stack(np.clip(table, 0.0, None)))


def coarsen(obj, factor: int = 2):
    """Keep every ``factor``-th lattice point (factor a power of two) and renormalize."""
    if factor < 2:
        return obj
    if factor & (factor - 1):
        raise InvalidParameters(f"coarsening factor must be a power of two, got {factor}", field="factor")
    while factor > 1:
        obj = _coarsen_once(obj)
        factor //= 2
    return obj


def _coarsen_once(obj):
    density = obj if isinstance(obj, GridDensity) else obj.density
    grid = Grid(tuple(a.decimated() for a in density.grid.axes))
    keep = tuple(slice(0, a.points * 2 - 1, 2) for a in grid.axes)
    coarse = GridDensity(grid, normalize_values(density.values[keep], grid), density.coverage_warning)
    if isinstance(obj, GridDensity):
        return coarse
    return type(obj)(coarse, obj.states[keep].copy(), obj.zero_mask[keep])
