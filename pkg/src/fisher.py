import logging
import math
from dataclasses import dataclass, field, asdict
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.ndimage import binary_erosion

from .config import config
from .cq_model import (
    Axis,
    CCQState,
    CQState,
    Grid,
    GridDensity,
    normalize_values,
)
from .entropy_functionals import cmi_with_noise, entropy_X_given_M
from .heat_flow import HeatParams, gaussian_kernel, heat_evolve_cq
from .validator import DimensionMismatch, InvalidParameters, ScheduleTooCoarse

logger = logging.getLogger(__name__)

METHOD_MI_RATIO = "mi_ratio"
METHOD_ENTROPY_DERIVATIVE = "entropy_derivative"


@dataclass
class FisherEstimate:
    value: float
    method: str
    t_schedule: List[float]
    extrapolated: bool
    error_estimate: float
    ratios: List[float] = field(default_factory=list)
    cross_check: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


def default_schedule(s: CQState) -> List[float]:
    """Fractions of Var(X), scaled up so the smallest time clears the grid floor."""
    variance = float(np.sum(s.density.variance()))
    h = min(s.grid.spacings)
    floor = max(config.fisher.schedule_floor, (config.fisher.min_kernel_cells * h) ** 2)
    times = [f * variance for f in config.fisher.schedule_fractions]
    scale = max(1.0, floor / min(times))
    return [t * scale for t in times]


def _check_schedule(t_schedule: Sequence[float]) -> List[float]:
    times = [float(t) for t in t_schedule]
    if len(times) < 2:
        raise InvalidParameters("a Fisher schedule needs at least two times", field="t_schedule", raw_value=times)
    if any(t <= 0.0 for t in times) or any(b >= a for a, b in zip(times, times[1:])):
        raise InvalidParameters(
            "a Fisher schedule must be positive and strictly decreasing", field="t_schedule", raw_value=times
        )
    return times


def richardson(values: Sequence[float], times: Sequence[float]) -> Tuple[float, float]:
    """Linear extrapolation to t -> 0 on the smallest pair, with an error estimate.

    For times t1 > t2 with ratio r = t1 / t2 the estimate is
    (r * v(t2) - v(t1)) / (r - 1). The error is the shift against the previous
    pair, or against the last raw value when only two points exist.
    """
    def pair(i: int) -> float:
        r = times[i - 1] / times[i]
        return (r * values[i] - values[i - 1]) / (r - 1.0)

    if len(values) < 2 or len(values) != len(times):
        raise InvalidParameters("richardson needs matching values and times (>= 2)", field="values")
    value = pair(len(values) - 1)
    if len(values) >= 3:
        error = abs(value - pair(len(values) - 2))
    else:
        error = abs(value - values[-1])
    return float(value), float(error)


def _check_monotone(ratios: List[float], error: float, times: List[float], method: str):
    # each finite-t ratio is a lower bound that grows as t shrinks
    slack = max(error, 1e-9 + 1e-6 * abs(ratios[-1]))
    for (t_big, r_big), (t_small, r_small) in zip(zip(times, ratios), zip(times[1:], ratios[1:])):
        if r_small < r_big - slack:
            raise ScheduleTooCoarse(
                f"{method}: ratio drops from {r_big:.6g} (t={t_big:.3g}) to {r_small:.6g} (t={t_small:.3g}) "
                f"beyond error {slack:.3g}; refine the grid",
                field="t_schedule", raw_value=times
            )


def noise_bundle(s: CQState, t: float) -> CCQState:
    """Joint (X', Z, M) state with X' = X + sqrt(t) Z on a shared lattice.

    Z lives on the lattice z_k = k h / sqrt(t) with the weights of the time-t
    heat kernel, so rho'(x', z) = rho(x' - sqrt(t) z) needs no interpolation.
    """
    if s.grid.n != 1:
        raise DimensionMismatch("noise bundles are built for one-axis CQ states", field="grid")
    HeatParams(t)
    axis = s.grid.axes[0]
    h = axis.spacing
    kernel = gaussian_kernel(t, h)
    half = (kernel.size - 1) // 2
    dz = h / math.sqrt(t) if t > 0.0 else 1.0
    z_half = max(half, int(math.ceil((config.grid.min_points - 1) / 2)))

    x_axis = axis.extended(half)
    z_axis = Axis(-z_half * dz, z_half * dz, 2 * z_half + 1)
    gx, gz, dim = s.grid.shape[0], z_axis.points, s.dim

    values = np.zeros((x_axis.points, gz))
    states = np.broadcast_to(np.eye(dim, dtype=complex) / dim, (x_axis.points, gz, dim, dim)).copy()
    for k in range(-half, half + 1):
        column = k + z_half
        rows = slice(half + k, half + k + gx)
        values[rows, column] = s.density.values * kernel[k + half] / dz
        states[rows, column] = s.states

    grid = Grid((x_axis, z_axis))
    values = normalize_values(values, grid)
    mask = values < config.tolerance.zero_mass
    states[mask] = np.eye(dim) / dim
    return CCQState(GridDensity(grid, values, s.density.coverage_warning), states, mask)


def fisher_mi_ratio(s: CQState, t_schedule: Sequence[float] = None) -> FisherEstimate:
    """J(X|M) as the t -> 0 limit of I(X + sqrt(t) Z : Z | M) / t."""
    if s.grid.n != 1:
        raise DimensionMismatch("the mutual-information estimator handles one-axis CQ states", field="grid")
    times = _check_schedule(t_schedule or default_schedule(s))
    ratios = [cmi_with_noise(noise_bundle(s, t)) / t for t in times]
    value, error = richardson(ratios, times)
    _check_monotone(ratios, error, times, METHOD_MI_RATIO)
    return FisherEstimate(value, METHOD_MI_RATIO, times, True, error, ratios)


def fisher_debruijn(s: CQState, t_schedule: Sequence[float] = None) -> FisherEstimate:
    """J(X|M) as the initial slope of t -> S(X + sqrt(t) Z | M)."""
    times = _check_schedule(t_schedule or default_schedule(s))
    base = entropy_X_given_M(s)
    ratios = [(entropy_X_given_M(heat_evolve_cq(s, t)) - base) / t for t in times]
    value, error = richardson(ratios, times)
    _check_monotone(ratios, error, times, METHOD_ENTROPY_DERIVATIVE)
    return FisherEstimate(value, METHOD_ENTROPY_DERIVATIVE, times, True, error, ratios)


def fisher_at_time(s: CQState, t: float, t_schedule: Sequence[float] = None) -> FisherEstimate:
    HeatParams(t)
    evolved = heat_evolve_cq(s, t)
    result = fisher_debruijn(evolved, t_schedule)

    delta = result.t_schedule[-1]
    ahead = entropy_X_given_M(heat_evolve_cq(s, t + delta))
    if t > delta:
        behind = entropy_X_given_M(heat_evolve_cq(s, t - delta))
        result.cross_check = (ahead - behind) / (2.0 * delta)
    else:
        result.cross_check = (ahead - entropy_X_given_M(evolved)) / delta
    return result


def fisher_matrix_classical(p: GridDensity) -> np.ndarray:
    """J_ij = integral of d_i ln p * d_j ln p * p over the effective support."""
    values = p.values
    support = values > 1e-12 * values.max()
    log_p = np.log(np.where(support, values, 1.0))
    gradients = np.gradient(log_p, *p.grid.spacings)
    if p.grid.n == 1:
        gradients = [gradients]
    interior = binary_erosion(support)
    weights = np.where(interior, values, 0.0) * p.grid.cell_volume
    n = p.grid.n
    matrix = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            matrix[i, j] = float((gradients[i] * gradients[j] * weights).sum())
    return matrix
