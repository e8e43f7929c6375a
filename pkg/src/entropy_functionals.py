import logging
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy.special import entr

from .config import config
from .cq_model import (
    CCQState,
    CQState,
    GridDensity,
    average_state,
    coarsen,
    marginal_x,
    marginal_y,
)
from .quantum_core import stack_entropy, von_neumann_entropy

logger = logging.getLogger(__name__)


@dataclass
class Estimate:
    value: float
    error_bar: float

    def to_dict(self) -> dict:
        return {"value": self.value, "error_bar": self.error_bar}


def _flag_large(name: str, value: float) -> float:
    if abs(value) > config.tolerance.entropy_warning:
        logger.warning("%s = %.4g nats looks non-finite (|S| > %g)", name, value, config.tolerance.entropy_warning)
    return value


def shannon_entropy(probabilities: Sequence[float]) -> float:
    return float(entr(np.asarray(probabilities, dtype=float)).sum())


def differential_entropy(p: GridDensity) -> float:
    value = float(entr(p.values).sum() * p.grid.cell_volume)
    return _flag_large("S(X)", value)


def entropy_M_given_X(s: Union[CQState, CCQState]) -> float:
    """S(M|X) = integral of S(rho(x)) p(x) dx."""
    pointwise = stack_entropy(s.states)
    return float((pointwise * s.density.values).sum() * s.density.grid.cell_volume)


def entropy_X_given_M(s: CQState) -> float:
    """Chain rule S(X|M) = S(M|X) + S(X) - S(M)."""
    value = entropy_M_given_X(s) + differential_entropy(s.density) - von_neumann_entropy(average_state(s))
    return _flag_large("S(X|M)", value)


def entropy_XY_given_M(s: CCQState) -> float:
    value = entropy_M_given_X(s) + differential_entropy(s.joint) - von_neumann_entropy(average_state(s))
    return _flag_large("S(XY|M)", value)


def cmi(s: CCQState) -> float:
    """I(X:Y|M) = S(X|M) + S(Y|M) - S(XY|M)."""
    return entropy_X_given_M(marginal_x(s)) + entropy_X_given_M(marginal_y(s)) - entropy_XY_given_M(s)


def cmi_with_noise(bundle: CCQState) -> float:
    """I(X + sqrt(t) Z : Z | M) evaluated on a (X', Z) bundle."""
    return cmi(bundle)


def estimate(functional: Callable, state, factor: int = 2) -> Estimate:
    """Value on the given grid plus the change under one grid halving."""
    value = functional(state)
    coarse = functional(coarsen(state, factor))
    return Estimate(value=float(value), error_bar=float(abs(value - coarse)))


def cmi_estimate(s: CCQState) -> Estimate:
    return estimate(cmi, s)
