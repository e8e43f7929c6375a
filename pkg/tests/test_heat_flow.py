import numpy as np
import pytest
from scipy.stats import norm

from src.cq_model import (
    CIBlock,
    Grid,
    StateFamilySpec,
    StructuredCIState,
    average_state,
    gaussian_density,
    make_ccq,
    marginal_x,
    marginal_y,
    realize,
    sum_pushforward,
)
from src.entropy_functionals import cmi, entropy_M_given_X
from src.heat_flow import (
    HeatParams,
    gaussian_kernel,
    heat_evolve_ccq_direction,
    heat_evolve_ccq_x,
    heat_evolve_ccq_y,
    heat_evolve_cq,
    heat_evolve_density,
    lattice_direction,
)
from src.validator import InvalidParameters
from tests.helpers import CONSTANT


def overlap(a, b):
    """Weighted states of two one-axis CQ states restricted to the smaller grid."""
    small, large = sorted((a, b), key=lambda s: s.grid.shape[0])
    offset = small.grid.axes[0].offset_in(large.grid.axes[0])
    n = small.grid.shape[0]
    return small.weighted_states(), large.weighted_states()[offset:offset + n]


def kernel_variance(kernel, h):
    k = np.arange(kernel.size) - (kernel.size - 1) // 2
    return float((kernel * (k * h) ** 2).sum())


def test_zero_time_kernel_is_identity():
    assert np.array_equal(gaussian_kernel(0.0, 0.1), np.ones(1))


@pytest.mark.parametrize("t", [1e-4, 0.5, 2.0])
def test_kernel_has_unit_mass_and_variance_t(t):
    kernel = gaussian_kernel(t, 0.1)
    assert kernel.sum() == pytest.approx(1.0)
    assert np.allclose(kernel, kernel[::-1])
    assert kernel_variance(kernel, 0.1) == pytest.approx(t, rel=1e-8)


def test_small_time_uses_three_points():
    assert gaussian_kernel(1e-4, 0.1).size == 3


def test_heat_params_validation():
    with pytest.raises(InvalidParameters):
        HeatParams(-1.0)
    with pytest.raises(InvalidParameters):
        HeatParams(1.0, pad_factor=3.0)


def test_heat_adds_variance(line):
    p = gaussian_density(0.0, 1.0, line)
    evolved = heat_evolve_density(p, 1.5)
    assert evolved.mass() == pytest.approx(1.0)
    assert evolved.variance()[0] == pytest.approx(2.5, abs=1e-6)
    assert evolved.grid.spacings[0] == pytest.approx(line.spacings[0])


def test_heat_at_zero_returns_input(line):
    p = gaussian_density(0.0, 1.0, line)
    assert heat_evolve_density(p, 0.0) is p


def test_heat_semigroup(line):
    p = gaussian_density(0.0, 1.0, line)
    once = heat_evolve_density(p, 1.0)
    twice = heat_evolve_density(heat_evolve_density(p, 0.5), 0.5)
    assert once.variance()[0] == pytest.approx(twice.variance()[0], abs=1e-8)


def test_heat_on_cq_keeps_constant_states(line):
    s = marginal_x(realize(StructuredCIState([CIBlock(
        1.0, gaussian_density(0.0, 1.0, line), gaussian_density(0.0, 1.0, line),
        StateFamilySpec("constant", {"diag": [0.25, 0.75]}), CONSTANT,
    )])))
    evolved = heat_evolve_cq(s, 1.0)
    assert evolved.dim == 2
    assert np.allclose(evolved.states[..., 1, 1], 0.75)


def test_heat_on_x_leaves_y(equal_gaussians):
    evolved = heat_evolve_ccq_x(equal_gaussians, 1.0)
    assert evolved.grid_y.shape == equal_gaussians.grid_y.shape
    assert marginal_x(evolved).density.variance()[0] == pytest.approx(2.0, abs=1e-6)
    assert marginal_y(evolved).density.variance()[0] == pytest.approx(1.0, abs=1e-6)


def test_heat_on_y(equal_gaussians):
    evolved = heat_evolve_ccq_y(equal_gaussians, 0.5)
    assert marginal_y(evolved).density.variance()[0] == pytest.approx(1.5, abs=1e-6)


@pytest.mark.parametrize("lam, expected", [(0.5, (1, 1)), (0.2, (1, 4)), (1.0, (1, 0)), (0.0, (0, 1)), (1 / 3, (1, 2))])
def test_lattice_direction(lam, expected):
    assert lattice_direction(lam) == expected


@pytest.mark.parametrize("lam", [0.3, -0.1, 1.5])
def test_lattice_direction_rejects(lam):
    with pytest.raises(InvalidParameters):
        lattice_direction(lam)


def test_shared_noise_direction(equal_gaussians):
    t = 1.0
    evolved = heat_evolve_ccq_direction(equal_gaussians, t, 0.5)
    assert marginal_x(evolved).density.variance()[0] == pytest.approx(1.0 + 0.25 * t, abs=1e-6)
    assert marginal_y(evolved).density.variance()[0] == pytest.approx(1.0 + 0.25 * t, abs=1e-6)
    assert sum_pushforward(evolved).density.variance()[0] == pytest.approx(2.0 + t, abs=1e-6)


def test_shared_noise_endpoint_is_single_axis(equal_gaussians):
    evolved = heat_evolve_ccq_direction(equal_gaussians, 0.8, 0.0)
    assert marginal_x(evolved).density.variance()[0] == pytest.approx(1.0, abs=1e-6)
    assert marginal_y(evolved).density.variance()[0] == pytest.approx(1.8, abs=1e-6)


def test_heat_semigroup_pointwise(line):
    p = gaussian_density(0.0, 1.0, line)
    once = heat_evolve_density(p, 1.25)
    twice = heat_evolve_density(heat_evolve_density(p, 0.5), 0.75)
    assert np.abs(once.values_on(twice.grid) - twice.values).max() < 1e-7


def test_heat_matches_gaussian_pdf():
    grid = Grid.line(-10.0, 10.0, 1024)
    evolved = heat_evolve_density(gaussian_density(0.0, 1.0, grid), 3.0)
    expected = norm(scale=2.0).pdf(evolved.nodes())
    assert np.abs(evolved.values - expected).max() < 1e-6


def test_axis_flows_commute(qubit_pair):
    xy = heat_evolve_ccq_y(heat_evolve_ccq_x(qubit_pair, 0.5), 0.75)
    yx = heat_evolve_ccq_x(heat_evolve_ccq_y(qubit_pair, 0.75), 0.5)
    assert xy.grid.matches(yx.grid)
    assert np.abs(xy.joint.values - yx.joint.values).max() < 1e-7
    assert np.abs(xy.weighted_states() - yx.weighted_states()).max() < 1e-7


def test_sum_commutes_with_noise_on_x(qubit_pair):
    left = sum_pushforward(heat_evolve_ccq_x(qubit_pair, 1.0))
    right = heat_evolve_cq(sum_pushforward(qubit_pair), 1.0)
    assert left.grid.matches(right.grid)
    assert np.abs(left.density.values - right.density.values).max() < 1e-6
    assert np.abs(left.weighted_states() - right.weighted_states()).max() < 1e-6


@pytest.mark.parametrize("lam", [0.25, 0.5])
def test_sum_commutes_with_split_noise(qubit_pair, lam):
    t = 1.0
    split = heat_evolve_ccq_y(heat_evolve_ccq_x(qubit_pair, lam * t), (1.0 - lam) * t)
    a, b = overlap(sum_pushforward(split), heat_evolve_cq(sum_pushforward(qubit_pair), t))
    assert np.abs(a - b).max() < 1e-6


def test_heat_keeps_average_state(qubit_pair):
    s = marginal_x(qubit_pair)
    before = average_state(s).entries
    for t in [0.5, 2.0]:
        assert np.allclose(average_state(heat_evolve_cq(s, t)).entries, before, atol=1e-10)


def test_noise_makes_m_less_predictable(qubit_pair):
    s = marginal_x(qubit_pair)
    values = [entropy_M_given_X(heat_evolve_cq(s, t)) for t in [0.0, 0.5, 1.0, 2.0, 4.0]]
    assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))
    assert values[-1] > values[0]


def test_heat_on_x_keeps_conditional_independence(qubit_pair):
    assert cmi(qubit_pair) < 1e-6
    assert cmi(heat_evolve_ccq_x(qubit_pair, 1.0)) < 1e-6


def test_heat_on_x_cannot_increase_correlation(line):
    rho = 0.5
    joint = gaussian_density([0.0, 0.0], [[1.0, rho], [rho, 1.0]], Grid.product(line, line))
    s = make_ccq(joint, lambda x, y: np.eye(1))
    before = cmi(s)
    assert before == pytest.approx(-0.5 * np.log(1.0 - rho ** 2), abs=1e-3)
    for t in [0.5, 1.0, 2.0]:
        after = cmi(heat_evolve_ccq_x(s, t))
        assert after <= before + 1e-9
        assert after == pytest.approx(-0.5 * np.log(1.0 - rho ** 2 / (1.0 + t)), abs=1e-3)
