import logging
from dataclasses import dataclass, field
from typing import List, Tuple, Sequence

import numpy as np
from scipy.linalg import block_diag
from scipy.special import entr

from .config import config, ToleranceConfig
from .validator import (
    NotHermitian,
    NotPositive,
    TraceNotOne,
    DimensionMismatch,
    NotAProbabilityTable,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated state of the quantum system M (Hermitian, PSD, unit trace)."""
    entries: np.ndarray

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return clamp_eigenvalues(np.linalg.eigvalsh(self.entries))


@dataclass(frozen=True)
class BlockStructure:
    blocks: Tuple[Tuple[int, int], ...] = field(default_factory=tuple)

    def __post_init__(self):
        blocks = tuple((int(dx), int(dy)) for dx, dy in self.blocks)
        if not blocks:
            raise DimensionMismatch("block structure needs at least one block", field="blocks")
        for dx, dy in blocks:
            if dx < 1 or dy < 1:
                raise DimensionMismatch(
                    f"block dimensions must be >= 1, got ({dx}, {dy})", field="blocks", raw_value=(dx, dy)
                )
        object.__setattr__(self, "blocks", blocks)

    @property
    def block_dims(self) -> List[int]:
        return [dx * dy for dx, dy in self.blocks]

    @property
    def dim(self) -> int:
        return sum(self.block_dims)

    @property
    def offsets(self) -> List[int]:
        return list(np.cumsum([0] + self.block_dims[:-1]))


def clamp_eigenvalues(eigenvalues: np.ndarray, eps: float = None) -> np.ndarray:
    # spectra of nearly pure states carry tiny negative eigenvalues
    eps = config.tolerance.eig_clamp if eps is None else eps
    return np.where(eigenvalues < eps, 0.0, eigenvalues)


def _index(index) -> Tuple[int, ...]:
    return tuple(int(i) for i in index)


def _check_square(matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim < 2 or matrix.shape[-1] != matrix.shape[-2] or matrix.shape[-1] == 0:
        raise DimensionMismatch(
            f"expected square matrices, got shape {matrix.shape}", field="entries", raw_value=matrix.shape
        )
    return matrix


def validate_states(matrices: np.ndarray, tolerance: ToleranceConfig = None) -> np.ndarray:
    """Validate a stack of candidate states with shape (..., d, d).

    Returns the Hermitian part with eigenvalues clamped to [0, 1] and traces
    renormalized. Errors report the worst offending index.
    """
    tol = tolerance or config.tolerance
    stack = _check_square(matrices)
    lead = stack.shape[:-2]

    adjoint = np.conj(np.swapaxes(stack, -1, -2))
    asymmetry = np.abs(stack - adjoint).max(axis=(-1, -2))
    if asymmetry.size and asymmetry.max() > tol.hermitian:
        worst = _index(np.unravel_index(np.argmax(asymmetry), lead)) if lead else ()
        raise NotHermitian(
            f"Hermiticity violated: max |A - A^dagger| = {asymmetry.max():.3e} > {tol.hermitian:.0e} at {worst}",
            field="entries", raw_value=float(asymmetry.max())
        )
    stack = 0.5 * (stack + adjoint)

    eigenvalues, eigenvectors = np.linalg.eigh(stack)
    smallest = eigenvalues[..., 0]
    if smallest.size and smallest.min() < -tol.positive:
        worst = _index(np.unravel_index(np.argmin(smallest), lead)) if lead else ()
        raise NotPositive(
            f"positivity violated: smallest eigenvalue {smallest.min():.3e} < -{tol.positive:.0e} at {worst}",
            field="entries", raw_value=float(smallest.min())
        )

    traces = eigenvalues.sum(axis=-1)
    deviation = np.abs(traces - 1.0)
    if deviation.size and deviation.max() > tol.trace:
        worst = _index(np.unravel_index(np.argmax(deviation), lead)) if lead else ()
        raise TraceNotOne(
            f"unit trace violated: |Tr A - 1| = {deviation.max():.3e} > {tol.trace:.0e} at {worst}",
            field="entries", raw_value=float(deviation.max())
        )

    needs_clamp = (eigenvalues < 0.0).any(axis=-1)
    if needs_clamp.any():
        clamped = np.clip(eigenvalues, 0.0, 1.0)
        rebuilt = np.einsum('...ik,...k,...jk->...ij', eigenvectors, clamped, np.conj(eigenvectors))
        stack = np.where(needs_clamp[..., None, None], rebuilt, stack)

    traces = np.real(np.trace(stack, axis1=-2, axis2=-1))
    return stack / traces[..., None, None]


def validate(matrix: np.ndarray, tolerance: ToleranceConfig = None) -> DensityMatrix:
    matrix = _check_square(matrix)
    if matrix.ndim != 2:
        raise DimensionMismatch(f"expected a single d x d matrix, got shape {matrix.shape}", field="entries")
    return DensityMatrix(entries=validate_states(matrix, tolerance))


def stack_entropy(states: np.ndarray) -> np.ndarray:
    """Pointwise von Neumann entropy (nats) of a (..., d, d) stack."""
    eigenvalues = clamp_eigenvalues(np.linalg.eigvalsh(states))
    return entr(eigenvalues).sum(axis=-1)


def von_neumann_entropy(rho: DensityMatrix) -> float:
    return float(stack_entropy(rho.entries))


def maximally_mixed(dim: int) -> DensityMatrix:
    return DensityMatrix(entries=np.eye(dim, dtype=complex) / dim)


def pure_state(vector: Sequence[complex]) -> DensityMatrix:
    psi = np.asarray(vector, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return validate(np.outer(psi, np.conj(psi)))


def tensor(rho: DensityMatrix, sigma: DensityMatrix) -> DensityMatrix:
    return DensityMatrix(entries=np.kron(rho.entries, sigma.entries))


def tensor_grid(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Outer Kronecker product of state stacks (Gx, a, a) and (Gy, b, b) -> (Gx, Gy, ab, ab)."""
    gx, a = left.shape[0], left.shape[-1]
    gy, b = right.shape[0], right.shape[-1]
    product = np.einsum('xij,ykl->xyikjl', left, right)
    return product.reshape(gx, gy, a * b, a * b)


def check_probability_vector(weights: Sequence[float], tolerance: float = None) -> np.ndarray:
    tol = config.tolerance.probability if tolerance is None else tolerance
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 1 or weights.size == 0:
        raise NotAProbabilityTable("weights must be a non-empty vector", field="weights", raw_value=weights)
    if weights.min() < 0.0 or abs(weights.sum() - 1.0) > tol:
        raise NotAProbabilityTable(
            f"weights must be nonnegative and sum to 1 (sum = {weights.sum():.15f})",
            field="weights", raw_value=weights.tolist()
        )
    return weights


def direct_sum(
        weights: Sequence[float],
        parts: List[DensityMatrix],
        structure: BlockStructure
) -> DensityMatrix:
    weights = check_probability_vector(weights)
    if len(parts) != len(structure.blocks) or len(weights) != len(parts):
        raise DimensionMismatch(
            f"{len(weights)} weights, {len(parts)} parts and {len(structure.blocks)} blocks do not match",
            field="parts"
        )
    for i, (part, expected) in enumerate(zip(parts, structure.block_dims)):
        if part.dim != expected:
            raise DimensionMismatch(
                f"block {i} has dimension {part.dim}, structure declares {expected}",
                field=f"parts[{i}]", raw_value=part.dim
            )
    assembled = block_diag(*[r * part.entries for r, part in zip(weights, parts)])
    return validate(assembled)


def direct_sum_grid(blocks: List[np.ndarray]) -> np.ndarray:
    """Block-diagonal assembly of weighted stacks (..., d_i, d_i) -> (..., d, d)."""
    lead = blocks[0].shape[:-2]
    dim = sum(b.shape[-1] for b in blocks)
    out = np.zeros(lead + (dim, dim), dtype=complex)
    offset = 0
    for block in blocks:
        if block.shape[:-2] != lead:
            raise DimensionMismatch("block stacks live on different grids", field="blocks")
        size = block.shape[-1]
        out[..., offset:offset + size, offset:offset + size] = block
        offset += size
    return out


def trace_norm_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.abs(np.linalg.eigvalsh(a - b)).sum(axis=-1)
