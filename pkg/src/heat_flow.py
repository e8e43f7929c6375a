import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Tuple

import numpy as np
from scipy.ndimage import convolve1d

from .config import config
from .cq_model import (
    CCQState,
    CQState,
    Grid,
    GridDensity,
    conditional_split,
    normalize_values,
)
from .validator import GridBudgetExceeded, IncompatibleGrids, InvalidParameters

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HeatParams:
    """Heat-flow time t (added variance per axis) and grid extension factor."""
    t: float
    pad_factor: float = config.heat.pad_factor

    def __post_init__(self):
        if not (np.isfinite(self.t) and self.t >= 0.0):
            raise InvalidParameters(f"heat time must be finite and >= 0, got {self.t}", field="t", raw_value=self.t)
        if self.pad_factor < 4.0:
            raise InvalidParameters(
                f"grid pad factor must be >= 4, got {self.pad_factor}", field="pad_factor", raw_value=self.pad_factor
            )


def gaussian_kernel(t: float, h: float) -> np.ndarray:
    """Lattice kernel of variance t on spacing h, symmetric and summing to one.

    A sampled Gaussian truncated at ``kernel_truncation`` standard deviations.
    Below sigma = h / sqrt(2) sampling no longer reproduces the variance, so
    the three-point kernel [a, 1 - 2a, a] with a = t / (2 h^2) is used instead.
    """
    if t < 0.0:
        raise InvalidParameters(f"kernel variance must be >= 0, got {t}", field="t", raw_value=t)
    if t == 0.0:
        return np.ones(1)
    if t < 0.5 * h * h:
        a = t / (2.0 * h * h)
        return np.array([a, 1.0 - 2.0 * a, a])
    half = int(math.ceil(config.heat.kernel_truncation * math.sqrt(t) / h))
    k = np.arange(-half, half + 1)
    weights = np.exp(-0.5 * (k * h) ** 2 / t)
    return weights / weights.sum()


def _convolve(array: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    if np.iscomplexobj(array):
        return (convolve1d(array.real, kernel, axis=axis, mode='constant', cval=0.0)
                + 1j * convolve1d(array.imag, kernel, axis=axis, mode='constant', cval=0.0))
    return convolve1d(array, kernel, axis=axis, mode='constant', cval=0.0)


def _pad_axis(array: np.ndarray, axis: int, cells: int) -> np.ndarray:
    widths = [(0, 0)] * array.ndim
    widths[axis] = (cells, cells)
    return np.pad(array, widths)


def _take_every_other(array: np.ndarray, axis: int, points: int) -> np.ndarray:
    index = [slice(None)] * array.ndim
    index[axis] = slice(0, 2 * points - 1, 2)
    return array[tuple(index)]


def _evolve_axis(
        arrays: List[np.ndarray],
        grid: Grid,
        axis: int,
        t: float,
        pad_factor: float
) -> Tuple[List[np.ndarray], Grid]:
    """Convolve every array along one grid axis with the time-t kernel.

    Long flows run in stages whose kernels stay within the half-width budget;
    an axis that outgrows the point budget is decimated while the spacing stays
    below sqrt(elapsed t) / decimation_sigma_cells.
    """
    heat = config.heat
    remaining, elapsed = float(t), 0.0
    while remaining > 0.0:
        h = grid.axes[axis].spacing
        max_step = (heat.max_kernel_halfwidth * h / heat.kernel_truncation) ** 2
        step = remaining if remaining <= max_step * (1.0 + 1e-9) else max_step

        pad = int(math.ceil(pad_factor * math.sqrt(step) / h))
        kernel = gaussian_kernel(step, h)
        arrays = [_convolve(_pad_axis(a, axis, pad), kernel, axis) for a in arrays]
        grid = grid.replace_axis(axis, grid.axes[axis].extended(pad))
        elapsed += step
        remaining = 0.0 if step == remaining else remaining - step

        while grid.axes[axis].points > heat.max_axis_points:
            current = grid.axes[axis]
            if 2.0 * current.spacing > math.sqrt(elapsed) / heat.decimation_sigma_cells:
                raise GridBudgetExceeded(
                    f"axis {axis} reached {current.points} points (budget {heat.max_axis_points}) "
                    f"and cannot be decimated at spacing {current.spacing:.4g} after t={elapsed:.4g}",
                    field="t", raw_value=t
                )
            coarse = current.decimated()
            arrays = [_take_every_other(a, axis, coarse.points) for a in arrays]
            grid = grid.replace_axis(axis, coarse)
            logger.info("heat flow: decimated axis %d to %d points (h=%.4g)", axis, coarse.points, coarse.spacing)
    return arrays, grid


def heat_evolve_density(p: GridDensity, t: float, params: HeatParams = None) -> GridDensity:
    params = params or HeatParams(t)
    if t == 0.0:
        return p
    arrays, grid = [p.values], p.grid
    for axis in range(grid.n):
        arrays, grid = _evolve_axis(arrays, grid, axis, t, params.pad_factor)
    return GridDensity(grid, normalize_values(arrays[0], grid), p.coverage_warning)


def _evolve_weighted(s, t: float, axes: Tuple[int, ...], params: HeatParams):
    arrays, grid = [s.density.values, s.weighted_states()], s.density.grid
    for axis in axes:
        arrays, grid = _evolve_axis(arrays, grid, axis, t, params.pad_factor)
    return conditional_split(grid, arrays[0], arrays[1], s.density.coverage_warning)


def heat_evolve_cq(s: CQState, t: float, params: HeatParams = None) -> CQState:
    """X -> X + sqrt(t) Z with Z independent of X and M."""
    params = params or HeatParams(t)
    if t == 0.0:
        return s
    density, states, mask = _evolve_weighted(s, t, tuple(range(s.grid.n)), params)
    return CQState(density, states, mask)


def heat_evolve_ccq_x(s: CCQState, t: float, params: HeatParams = None) -> CCQState:
    params = params or HeatParams(t)
    if t == 0.0:
        return s
    density, states, mask = _evolve_weighted(s, t, (0,), params)
    return CCQState(density, states, mask)


def heat_evolve_ccq_y(s: CCQState, t: float, params: HeatParams = None) -> CCQState:
    params = params or HeatParams(t)
    if t == 0.0:
        return s
    density, states, mask = _evolve_weighted(s, t, (1,), params)
    return CCQState(density, states, mask)


def lattice_direction(lam: float) -> Tuple[int, int]:
    """Integer lattice direction (a, b) with lam = a / (a + b), denominator <= 8."""
    if not 0.0 <= lam <= 1.0:
        raise InvalidParameters(f"lambda must lie in [0, 1], got {lam}", field="lambda", raw_value=lam)
    frac = Fraction(lam).limit_denominator(8)
    if abs(float(frac) - lam) > 1e-9:
        raise InvalidParameters(
            f"lambda {lam} is not a fraction with denominator <= 8", field="lambda", raw_value=lam
        )
    return frac.numerator, frac.denominator - frac.numerator


def heat_evolve_ccq_direction(s: CCQState, t: float, lam: float) -> CCQState:
    """(X, Y) -> (X + lam sqrt(t) Z, Y + (1 - lam) sqrt(t) Z) with one shared Z."""
    HeatParams(t)
    a, b = lattice_direction(lam)
    if t == 0.0:
        return s
    if b == 0:
        return heat_evolve_ccq_x(s, t)
    if a == 0:
        return heat_evolve_ccq_y(s, t)

    axis_x, axis_y = s.grid_x.axes[0], s.grid_y.axes[0]
    h = axis_x.spacing
    if abs(axis_y.spacing - h) > 1e-9 * h:
        raise IncompatibleGrids(
            f"shared-noise flow needs equal spacings ({h:.6g} vs {axis_y.spacing:.6g})", field="grid_y"
        )

    # one lattice step along (a, b) moves Z by (a + b) h / sqrt(t)
    kernel = gaussian_kernel(t / (a + b) ** 2, h)
    half = (kernel.size - 1) // 2
    if half > config.heat.max_kernel_halfwidth:
        raise GridBudgetExceeded(
            f"shared-noise kernel needs {half} cells (budget {config.heat.max_kernel_halfwidth})",
            field="t", raw_value=t
        )

    values, weighted = s.joint.values, s.weighted_states()
    gx, gy = values.shape
    out_p = np.zeros((gx + 2 * a * half, gy + 2 * b * half))
    out_w = np.zeros(out_p.shape + weighted.shape[-2:], dtype=complex)
    for step, w in enumerate(kernel):
        i0, j0 = a * step, b * step
        out_p[i0:i0 + gx, j0:j0 + gy] += w * values
        out_w[i0:i0 + gx, j0:j0 + gy] += w * weighted

    grid = Grid((axis_x.extended(a * half), axis_y.extended(b * half)))
    density, states, mask = conditional_split(grid, out_p, out_w, s.joint.coverage_warning)
    return CCQState(density, states, mask)
