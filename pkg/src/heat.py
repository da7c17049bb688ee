"""
Heat flowing out of the measurement apparatus.

J_M(t) = tr[H D_M[rho(t)]]; positive values mean the system absorbs heat.
Currents are in units of Delta^2, heats in units of Delta.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.integrate import simpson

from src.bloch import (
    BlochState,
    QubitModel,
    Trajectory,
    bloch_generator,
    steady_state_bloch,
    steady_state_denominator,
)
from src.errors import ContractError, ConvergenceError, DegenerateModelError, DomainError
from src.lindblad import Channel, DensityMatrix, Liouvillian, dissipator_apply
from src.rates import MeasurementSpec

logger = logging.getLogger(__name__)

CONVERGENCE_RTOL = 1e-6
ZERO_COEFF_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class HeatSeries:
    """
    Sampled J_M(t) together with its steady value.

    ``tail_rate`` is the slowest decay rate of the generator; ``scale`` is the
    natural current scale (gamma * Delta) used by the convergence check.
    """

    times: np.ndarray
    values: np.ndarray
    steady_value: float
    tail_rate: float
    scale: float
    descriptor: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape:
            raise DomainError("heat series needs matching 1-D times and values")
        if times.size < 3:
            raise DomainError("heat series needs at least 3 samples")
        if np.any(np.diff(times) <= 0):
            raise DomainError("heat series times must be strictly increasing")
        if not np.isfinite(self.steady_value):
            raise DomainError("heat series steady value must be finite")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.times, "J_M": self.values})


class ExcessHeat(NamedTuple):
    value: float
    quadrature: float
    tail: float
    tail_bound: float


class StoredEnergy(NamedTuple):
    before: float
    after: float
    measurement_share: float
    measurement_heat: float


def _current_coefficients(meas: MeasurementSpec, delta: float) -> np.ndarray:
    """J_M = k . (x, y, z) for the qubit."""
    g = meas.gamma
    alpha, beta = meas.alpha, meas.beta
    return g * delta * np.array([alpha * beta.real, -alpha * beta.imag, -meas.beta_sq])


def heat_current_instant(state: BlochState, meas: MeasurementSpec, delta: float) -> float:
    """J_M = -gamma Delta |beta|^2 z + alpha gamma Delta (beta' x - beta'' y)."""
    return float(_current_coefficients(meas, delta) @ state.as_array())


def heat_current_general(
    channel: Channel,
    rho: Union[DensityMatrix, np.ndarray],
    energies: Sequence[float],
    basis: Optional[np.ndarray] = None,
) -> float:
    """
    Sum_k E_k <k| D_M[rho] |k>.

    Args:
        channel: Measurement channel
        rho: Density matrix
        energies: Eigenvalues E_k of the system Hamiltonian
        basis: Columns are the eigenvectors |k>; None when rho is already in the energy basis

    Returns:
        Heat current out of the measurement apparatus
    """
    entries = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    energies = np.asarray(energies, dtype=float)
    if entries.shape != channel.operator.shape or energies.shape != (entries.shape[0],):
        raise DomainError(
            f"dimension mismatch: rho {entries.shape}, channel {channel.operator.shape}, "
            f"{energies.size} energies"
        )
    change = dissipator_apply(channel, entries)
    if basis is not None:
        change = basis.conj().T @ change @ basis
    return float(energies @ change.diagonal().real)


def steady_state_heat_current(model: QubitModel) -> float:
    """
    Closed-form steady-state current
    |beta|^2 Delta gamma Gamma_- [4 Delta^2 + Gamma_+ (Gamma_+ + gamma)] / Den.

    Raises:
        DegenerateModelError: vanishing denominator
    """
    den = steady_state_denominator(model)
    if den <= 0:
        raise DegenerateModelError(f"steady-state current undefined for {model.describe()}")
    g = model.meas.gamma
    gp, gm = model.gamma_plus, model.gamma_minus
    delta = model.delta
    return float(model.meas.beta_sq * delta * g * gm * (4 * delta ** 2 + gp * (gp + g)) / den)


def heat_current_bounds(model: QubitModel) -> Tuple[float, float]:
    """(0, Delta gamma Gamma_- / (4 Gamma_+ + 2 gamma))."""
    g = model.meas.gamma
    den = 4 * model.gamma_plus + 2 * g
    if den == 0:
        return 0.0, 0.0
    return 0.0, float(model.delta * g * model.gamma_minus / den)


def _require_equator(model: QubitModel):
    if abs(model.meas.alpha) > ZERO_COEFF_TOL:
        raise ContractError(f"needs the equator measurement theta = pi/2, got theta={model.meas.theta}")


def transient_heat_current_equator(t, z0: float, model: QubitModel):
    """
    J_M(t) = (gamma Delta / 4)[Gamma_-/Gamma~_+ - (z0 + Gamma_-/Gamma~_+) exp(-Gamma~_+ t)].

    ``t`` may be a scalar or an array.
    """
    _require_equator(model)
    g = model.meas.gamma
    tilde = model.gamma_plus_tilde
    if tilde == 0:
        raise DegenerateModelError("Gamma~_+ = 0: no relaxation at the equator")
    z_inf = -model.gamma_minus / tilde
    z = z_inf + (z0 - z_inf) * np.exp(-tilde * np.asarray(t, dtype=float))
    current = -g * model.delta / 4 * z
    return float(current) if np.ndim(current) == 0 else current


def excess_heat(series: HeatSeries) -> ExcessHeat:
    """
    Q_ex = int_0^inf [J_M(t) - J_M] dt.

    Composite Simpson on the stored grid plus the exponential tail
    (J_M(t_end) - J_M) / tail_rate beyond the last sample.

    Raises:
        ConvergenceError: |J_M(t_end) - J_M| > 1e-6 max(|J_M|, gamma Delta)
    """
    deviation = series.values - series.steady_value
    residual = float(abs(deviation[-1]))
    tolerance = CONVERGENCE_RTOL * max(abs(series.steady_value), series.scale)
    tail = float(deviation[-1] / series.tail_rate) if series.tail_rate > 0 else 0.0
    tail_bound = abs(tail)
    if residual > tolerance:
        raise ConvergenceError(residual, tolerance, tail_bound)
    quadrature = float(simpson(deviation, x=series.times))
    logger.debug("excess heat: quadrature=%.6g tail=%.3g", quadrature, tail)
    return ExcessHeat(quadrature + tail, quadrature, tail, tail_bound)


def excess_heat_max(model: QubitModel) -> float:
    """
    Excess heat at the equator from the measurement-free steady state:
    Delta gamma Gamma_- (1/Gamma_+ - 1/Gamma~_+) / (4 Gamma~_+).
    """
    gp = model.gamma_plus
    if gp <= 0:
        raise DegenerateModelError("Gamma_+ = 0: measurement-free steady state undefined")
    tilde = model.gamma_plus_tilde
    return float(model.delta * model.meas.gamma * model.gamma_minus * (1 / gp - 1 / tilde) / (4 * tilde))


def excess_heat_exact(model: QubitModel, init: BlochState) -> float:
    """
    Q_ex without quadrature: int_0^inf (r - r_ss) dt = -A^{-1} (r0 - r_ss) for r' = A r + c,
    contracted with the linear current functional.
    """
    a, _ = bloch_generator(model)
    r_ss = steady_state_bloch(model).as_array()
    try:
        integral = np.linalg.solve(a, -(init.as_array() - r_ss))
    except np.linalg.LinAlgError as exc:
        raise DegenerateModelError(f"Bloch generator is singular for {model.describe()}") from exc
    return float(_current_coefficients(model.meas, model.delta) @ integral)


def photon_transfer_rates(model: QubitModel) -> Tuple[float, float]:
    """
    Absorption and emission rates driven by the equator measurement at the current maximum:
    gamma sum(Gamma^e) / (4 Gamma_+ + 2 gamma) and gamma sum(Gamma^a) / (4 Gamma_+ + 2 gamma).
    """
    g = model.meas.gamma
    den = 4 * model.gamma_plus + 2 * g
    if den == 0:
        return 0.0, 0.0
    emit_total = sum(pair.emit for pair in model.rates)
    absorb_total = sum(pair.absorb for pair in model.rates)
    return float(g * emit_total / den), float(g * absorb_total / den)


def stored_energy_shift(model: QubitModel) -> StoredEnergy:
    """Qubit energy before/after an equator measurement and the part of the rise paid by it."""
    gp = model.gamma_plus
    if gp <= 0:
        raise DegenerateModelError("Gamma_+ = 0: measurement-free steady state undefined")
    tilde = model.gamma_plus_tilde
    before = -model.delta * model.gamma_minus / (2 * gp)
    after = -model.delta * model.gamma_minus / (2 * tilde)
    share = model.meas.gamma / (2 * tilde)
    return StoredEnergy(float(before), float(after), float(share), float(share * (after - before)))


def generator_tail_rate(model: QubitModel) -> float:
    """Slowest decay rate of the Bloch generator."""
    a, _ = bloch_generator(model)
    rates = -np.linalg.eigvals(a).real
    return float(rates.min())


def heat_series(trajectory: Trajectory, model: QubitModel) -> HeatSeries:
    """J_M along a Bloch trajectory."""
    values = trajectory.states @ _current_coefficients(model.meas, model.delta)
    try:
        steady = steady_state_heat_current(model)
    except DegenerateModelError:
        steady = float(values[-1])
    return HeatSeries(
        times=trajectory.times,
        values=values,
        steady_value=steady,
        tail_rate=generator_tail_rate(model),
        scale=model.meas.gamma * model.delta,
        descriptor=model.describe(),
    )


def heat_series_general(
    times: Sequence[float],
    states: Sequence[DensityMatrix],
    channel: Channel,
    energies: Sequence[float],
    liouvillian: Liouvillian,
    steady_value: float,
    basis: Optional[np.ndarray] = None,
    scale: Optional[float] = None,
) -> HeatSeries:
    """J_M along a density-matrix trajectory of a generic model."""
    values = np.array([heat_current_general(channel, rho, energies, basis) for rho in states])
    if scale is None:
        energies = np.asarray(energies, dtype=float)
        scale = channel.rate * float(energies.max() - energies.min())
    return HeatSeries(
        times=np.asarray(times, dtype=float),
        values=values,
        steady_value=steady_value,
        tail_rate=liouvillian.slowest_decay_rate(),
        scale=scale,
        descriptor={"dim": liouvillian.dim, "gamma": channel.rate},
    )
