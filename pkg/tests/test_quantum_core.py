import numpy as np
import pytest
from scipy.stats import unitary_group

from src.quantum_core import (
    BlockStructure,
    direct_sum,
    maximally_mixed,
    pure_state,
    stack_entropy,
    tensor,
    tensor_grid,
    trace_norm_distance,
    validate,
    validate_states,
    von_neumann_entropy,
)
from src.validator import (
    DimensionMismatch,
    NotAProbabilityTable,
    NotHermitian,
    NotPositive,
    TraceNotOne,
)


def random_state(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return validate(rho / np.trace(rho).real)


def test_maximally_mixed_qubit_is_valid():
    rho = validate(np.eye(2) / 2)
    assert rho.dim == 2
    assert np.allclose(rho.entries, np.eye(2) / 2)


def test_pure_state_is_valid():
    rho = validate(np.diag([1.0, 0.0]))
    assert rho.eigenvalues() == pytest.approx([0.0, 1.0], abs=1e-12)


def test_trace_not_one():
    with pytest.raises(TraceNotOne):
        validate(np.diag([0.6, 0.6]))


def test_not_hermitian():
    with pytest.raises(NotHermitian):
        validate(np.array([[0.5, 0.1], [0.0, 0.5]]))


def test_not_positive():
    with pytest.raises(NotPositive):
        validate(np.diag([1.5, -0.5]))


def test_non_square_rejected():
    with pytest.raises(DimensionMismatch):
        validate(np.ones((2, 3)))


def test_tiny_negative_eigenvalue_is_clamped():
    rho = validate(np.diag([1.0 + 5e-11, -5e-11]))
    assert rho.eigenvalues().min() >= 0.0
    assert np.trace(rho.entries).real == pytest.approx(1.0, abs=1e-14)


def test_validate_states_reports_worst_index():
    stack = np.stack([np.eye(2) / 2, np.diag([0.7, 0.7]), np.eye(2) / 2])
    with pytest.raises(TraceNotOne, match=r"\(1,\)"):
        validate_states(stack)


@pytest.mark.parametrize("diag, expected", [
    ([0.5, 0.5], np.log(2)),
    ([1.0, 0.0], 0.0),
    ([0.5, 0.25, 0.25], 1.5 * np.log(2)),
])
def test_von_neumann_entropy(diag, expected):
    assert von_neumann_entropy(validate(np.diag(diag))) == pytest.approx(expected, abs=1e-12)


def test_rank_one_projector_has_zero_entropy():
    rho = pure_state([1.0, 1j, 0.5])
    assert von_neumann_entropy(rho) == pytest.approx(0.0, abs=1e-10)


def test_tensor_of_pure_and_mixed():
    rho = tensor(validate(np.diag([1.0, 0.0])), maximally_mixed(2))
    assert np.allclose(rho.entries, np.diag([0.5, 0.5, 0.0, 0.0]))


def test_tensor_with_trivial_system():
    rho = random_state(np.random.default_rng(1), 3)
    assert np.allclose(tensor(rho, maximally_mixed(1)).entries, rho.entries, atol=1e-12)


def test_entropy_is_additive_under_tensor():
    rng = np.random.default_rng(7)
    for _ in range(5):
        rho, sigma = random_state(rng, 2), random_state(rng, 3)
        joint = von_neumann_entropy(tensor(rho, sigma))
        assert joint == pytest.approx(von_neumann_entropy(rho) + von_neumann_entropy(sigma), abs=1e-10)


def test_tensor_grid_matches_kron():
    rng = np.random.default_rng(3)
    left = np.stack([random_state(rng, 2).entries for _ in range(3)])
    right = np.stack([random_state(rng, 2).entries for _ in range(4)])
    grid = tensor_grid(left, right)
    assert grid.shape == (3, 4, 4, 4)
    assert np.allclose(grid[2, 1], np.kron(left[2], right[1]))


def test_direct_sum_single_block():
    rho = random_state(np.random.default_rng(2), 2)
    assert np.allclose(direct_sum([1.0], [rho], BlockStructure(((2, 1),))).entries, rho.entries, atol=1e-10)


def test_direct_sum_of_two_pure_blocks():
    up, down = pure_state([1.0, 0.0]), pure_state([0.0, 1.0])
    rho = direct_sum([0.5, 0.5], [up, down], BlockStructure(((2, 1), (1, 2))))
    assert rho.dim == 4
    assert von_neumann_entropy(rho) == pytest.approx(np.log(2), abs=1e-12)


def test_direct_sum_entropy_rule():
    rng = np.random.default_rng(11)
    first, second = random_state(rng, 2), random_state(rng, 3)
    rho = direct_sum([0.3, 0.7], [first, second], BlockStructure(((2, 1), (3, 1))))
    shannon = -(0.3 * np.log(0.3) + 0.7 * np.log(0.7))
    expected = shannon + 0.3 * von_neumann_entropy(first) + 0.7 * von_neumann_entropy(second)
    assert von_neumann_entropy(rho) == pytest.approx(expected, abs=1e-10)


def test_direct_sum_rejects_bad_weights():
    rho = maximally_mixed(2)
    with pytest.raises(NotAProbabilityTable):
        direct_sum([0.6, 0.6], [rho, rho], BlockStructure(((2, 1), (2, 1))))


def test_direct_sum_rejects_wrong_block_dim():
    with pytest.raises(DimensionMismatch):
        direct_sum([1.0], [maximally_mixed(3)], BlockStructure(((2, 1),)))


def test_block_structure_offsets():
    structure = BlockStructure(((2, 1), (1, 2), (2, 2)))
    assert structure.block_dims == [2, 2, 4]
    assert structure.dim == 8
    assert structure.offsets == [0, 2, 4]


def test_stack_entropy_is_pointwise():
    stack = np.stack([np.eye(2) / 2, np.diag([1.0, 0.0])]).astype(complex)
    assert stack_entropy(stack) == pytest.approx([np.log(2), 0.0], abs=1e-12)


def test_trace_norm_distance_of_orthogonal_pure_states():
    up, down = pure_state([1.0, 0.0]), pure_state([0.0, 1.0])
    assert float(trace_norm_distance(up.entries, down.entries)) == pytest.approx(2.0)


def test_density_matrix_is_frozen():
    rho = maximally_mixed(2)
    with pytest.raises(Exception):
        rho.entries = np.eye(2)


@pytest.mark.parametrize("dim", [2, 3, 4])
def test_entropy_is_unitarily_invariant(dim):
    rng = np.random.default_rng(dim)
    rho = random_state(rng, dim)
    u = unitary_group.rvs(dim, random_state=dim)
    rotated = validate(u @ rho.entries @ u.conj().T)
    assert von_neumann_entropy(rotated) == pytest.approx(von_neumann_entropy(rho), abs=1e-10)
