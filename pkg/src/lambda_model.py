"""
Three-level Lambda system between a hot and a cold bath, measured on the
superposition (|0> + e^{i phi}|1>)/sqrt(2) of its two lower levels.

Basis ordering is (|0>, |1>, |2>) with energies (0, Delta - delta, Delta).
The hot bath drives |0> <-> |2>, the cold bath |1> <-> |2>.
"""

import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import List, Sequence

import numpy as np
import pandas as pd

from src.errors import ColdHotOrderWarning, DomainError, HeatFlowError
from src.heat import heat_current_general
from src.lindblad import (
    Channel,
    DensityMatrix,
    LindbladModel,
    build_liouvillian,
    measurement_channel,
    state_projector,
    steady_state,
)
from src.parallel import map_points
from src.rates import BathSpec, RatePair, bath_rates

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["gamma", "J_M", "rho00", "rho11", "rho22", "inversion_flag"]


def _transition(i: int, j: int) -> np.ndarray:
    op = np.zeros((3, 3), dtype=complex)
    op[i, j] = 1
    return op


@dataclass(frozen=True)
class LambdaParams:
    delta_big: float = 1.0
    delta_small: float = 0.5
    hot: BathSpec = field(default_factory=lambda: BathSpec(kappa=0.01, temperature=5.0, label="hot"))
    cold: BathSpec = field(default_factory=lambda: BathSpec(kappa=0.01, temperature=2.0, label="cold"))
    gamma: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if not (0 < self.delta_small < self.delta_big) or not np.isfinite(self.delta_big):
            raise DomainError(
                f"need 0 < delta < Delta, got delta={self.delta_small}, Delta={self.delta_big}"
            )
        if not np.isfinite(self.gamma) or self.gamma < 0:
            raise DomainError(f"measurement strength gamma must be >= 0, got {self.gamma}")
        if not np.isfinite(self.phi):
            raise DomainError(f"phi must be finite, got {self.phi}")
        if self.hot.temperature <= self.cold.temperature:
            warnings.warn(
                f"hot bath (T={self.hot.temperature}) is not hotter than the cold bath "
                f"(T={self.cold.temperature})",
                ColdHotOrderWarning,
                stacklevel=3,
            )

    @property
    def energies(self) -> np.ndarray:
        return np.array([0.0, self.delta_big - self.delta_small, self.delta_big])

    @property
    def hamiltonian(self) -> np.ndarray:
        return np.diag(self.energies).astype(complex)

    @property
    def measured_state(self) -> np.ndarray:
        return np.array([1, np.exp(1j * self.phi), 0]) / np.sqrt(2)


@dataclass(frozen=True)
class LambdaRates:
    hot: RatePair
    cold: RatePair


def lambda_rates(params: LambdaParams) -> LambdaRates:
    """Hot rates at Delta, cold rates at delta."""
    return LambdaRates(
        hot=bath_rates(params.delta_big, params.hot),
        cold=bath_rates(params.delta_small, params.cold),
    )


def build_lambda_model(params: LambdaParams) -> LindbladModel:
    """Four bath channels plus the measurement of the lower-level superposition."""
    rates = lambda_rates(params)
    channels = (
        Channel(_transition(0, 2), rates.hot.emit, label="hot-emit"),
        Channel(_transition(2, 0), rates.hot.absorb, label="hot-absorb"),
        Channel(_transition(1, 2), rates.cold.emit, label="cold-emit"),
        Channel(_transition(2, 1), rates.cold.absorb, label="cold-absorb"),
    )
    return LindbladModel(
        hamiltonian=params.hamiltonian,
        channels=channels,
        measurement=measurement_channel(state_projector(params.measured_state), params.gamma),
    )


def _boltzmann_exponent(energy: float, temperature: float) -> float:
    return np.inf if temperature == 0 else energy / temperature


def population_inversion_predicted(params: LambdaParams) -> bool:
    """Measurement-free inversion of |1> over |0>: Delta/T_h < delta/T_c."""
    hot = _boltzmann_exponent(params.delta_big, params.hot.temperature)
    cold = _boltzmann_exponent(params.delta_small, params.cold.temperature)
    return bool(hot < cold)


def lambda_steady_state(params: LambdaParams) -> DensityMatrix:
    return steady_state(build_liouvillian(build_lambda_model(params)))


def _sweep_point(params: LambdaParams) -> dict:
    model = build_lambda_model(params)
    try:
        rho = steady_state(build_liouvillian(model))
    except HeatFlowError as exc:
        logger.warning("Lambda steady state failed at gamma=%g: %s", params.gamma, exc)
        return {
            "gamma": params.gamma, "J_M": np.nan, "rho00": np.nan, "rho11": np.nan,
            "rho22": np.nan, "inversion_flag": False, "error": str(exc),
        }
    populations = rho.populations
    current = heat_current_general(model.measurement, rho, params.energies)
    return {
        "gamma": params.gamma,
        "J_M": current,
        "rho00": populations[0],
        "rho11": populations[1],
        "rho22": populations[2],
        "inversion_flag": bool(populations[1] > populations[0]),
        "error": "",
    }


def lambda_heat_current_sweep(
    params: LambdaParams, gammas: Sequence[float], workers: int = 1
) -> pd.DataFrame:
    """
    Steady-state measurement heat current for each gamma.

    Args:
        params: Lambda model; its own gamma is ignored
        gammas: Measurement strengths (>= 0)
        workers: Thread pool size; rows keep the order of ``gammas``

    Returns:
        DataFrame with columns gamma, J_M, rho00, rho11, rho22, inversion_flag
        (and ``error`` when some point failed)
    """
    gammas = [float(g) for g in gammas]
    if any(g < 0 or not np.isfinite(g) for g in gammas):
        raise DomainError(f"measurement strengths must be finite and >= 0, got {gammas}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ColdHotOrderWarning)
        points: List[LambdaParams] = [replace(params, gamma=g) for g in gammas]

    rows = map_points(_sweep_point, points, workers)

    if not rows:
        return pd.DataFrame(columns=SWEEP_COLUMNS)
    frame = pd.DataFrame(rows)
    if (frame["error"] == "").all():
        frame = frame[SWEEP_COLUMNS]
    logger.info("Lambda sweep over %d gamma values done", len(gammas))
    return frame
