import sys
from pathlib import Path

import numpy as np
import pytest

# Add the repository root so `from src... import` works without installation
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.bloch import QubitModel  # noqa: E402
from src.rates import MeasurementSpec  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def figure_model():
    """Delta=1, Gamma_+=0.02, Gamma_-=0.01 qubit; measurement built per test."""
    def build(theta: float, gamma: float = 0.01, phi: float = 0.0) -> QubitModel:
        return QubitModel.from_aggregates(1.0, 0.02, 0.01, MeasurementSpec(gamma, theta, phi))
    return build
