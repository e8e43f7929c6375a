import pytest

from src.cq_model import Grid
from tests.helpers import QUBIT, gaussian_pair


@pytest.fixture
def line():
    return Grid.line(-8.0, 8.0, 129)


@pytest.fixture
def equal_gaussians(line):
    return gaussian_pair(line)


@pytest.fixture
def qubit_pair(line):
    return gaussian_pair(line, 1.0, 2.0, QUBIT, QUBIT)
