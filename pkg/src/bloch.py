"""
Qubit dynamics in Bloch-vector form.

The Bloch equations are affine, r' = A r + c, with r = (<sigma_x>, <sigma_y>, <sigma_z>).
The measurement of P_n with axis m = (2 beta', -2 beta'', 2 alpha) contributes
-(gamma/2)(r - (m.r) m); the baths contribute relaxation toward -Gamma_-/Gamma_+.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd

from src.errors import ContractError, DegenerateModelError, DomainError, IntegrationError
from src.lindblad import (
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    Channel,
    LindbladModel,
    measurement_channel,
)
from src.rates import (
    AggregateRates,
    BathSpec,
    MeasurementSpec,
    RatePair,
    aggregate_rates,
    bath_rates,
)

logger = logging.getLogger(__name__)

BALL_TOL = 1e-9
ZERO_COEFF_TOL = 1e-12
# Steps iterated one at a time before switching to block propagation.
BLOCK_SIZE = 256


@dataclass(frozen=True)
class BlochState:
    """Bloch vector (<sigma_x>, <sigma_y>, <sigma_z>) at time t."""

    x: float
    y: float
    z: float
    t: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @property
    def norm_sq(self) -> float:
        return float(self.x ** 2 + self.y ** 2 + self.z ** 2)

    def is_physical(self, tol: float = BALL_TOL) -> bool:
        return self.norm_sq <= 1 + tol


class BlochRates(NamedTuple):
    """Time derivative of a Bloch vector."""

    x_dot: float
    y_dot: float
    z_dot: float


class DampingCoefficients(NamedTuple):
    z: float
    x: float
    y: float
    z_free: float
    x_free: float
    y_free: float


@dataclass(frozen=True)
class QubitModel:
    """
    Qubit with splitting delta, its heat baths and the measurement.

    Rates come from ``baths`` unless given directly via ``rates`` (or ``from_aggregates``).
    """

    delta: float
    meas: MeasurementSpec
    baths: Tuple[BathSpec, ...] = ()
    rates: Tuple[RatePair, ...] = ()
    aggregates: AggregateRates = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not np.isfinite(self.delta) or self.delta <= 0:
            raise DomainError(f"qubit splitting must be > 0, got {self.delta}")
        object.__setattr__(self, "baths", tuple(self.baths))
        if not self.rates:
            object.__setattr__(
                self, "rates", tuple(bath_rates(self.delta, bath) for bath in self.baths)
            )
        object.__setattr__(self, "rates", tuple(self.rates))
        object.__setattr__(self, "aggregates", aggregate_rates(self.rates, self.meas.gamma))
        if self.aggregates.gamma_plus == 0 and self.meas.gamma == 0:
            raise DegenerateModelError("qubit has neither a bath nor a measurement")

    @classmethod
    def from_aggregates(
        cls, delta: float, gamma_plus: float, gamma_minus: float, meas: MeasurementSpec
    ) -> "QubitModel":
        """Model with one effective channel reproducing the given Gamma_+ and Gamma_-."""
        return cls(delta=delta, meas=meas, rates=(RatePair.from_aggregates(gamma_plus, gamma_minus),))

    def with_measurement(self, meas: MeasurementSpec) -> "QubitModel":
        return replace(self, meas=meas)

    @property
    def gamma_plus(self) -> float:
        return self.aggregates.gamma_plus

    @property
    def gamma_minus(self) -> float:
        return self.aggregates.gamma_minus

    @property
    def gamma_plus_tilde(self) -> float:
        return self.aggregates.gamma_plus_tilde

    def describe(self) -> dict:
        return {
            "delta": self.delta,
            "gamma": self.meas.gamma,
            "theta": self.meas.theta,
            "phi": self.meas.phi,
            "gamma_plus": self.gamma_plus,
            "gamma_minus": self.gamma_minus,
        }


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Bloch states on a strictly increasing time grid."""

    times: np.ndarray
    states: np.ndarray
    dt: float
    method: str = "rk4"

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, index: int) -> BlochState:
        x, y, z = self.states[index]
        return BlochState(float(x), float(y), float(z), float(self.times[index]))

    @property
    def final(self) -> BlochState:
        return self[len(self) - 1]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"t": self.times, "sx": self.states[:, 0], "sy": self.states[:, 1], "sz": self.states[:, 2]}
        )


def bloch_generator(model: QubitModel) -> Tuple[np.ndarray, np.ndarray]:
    """Affine form (A, c) of the Bloch equations in (x, y, z) order."""
    g = model.meas.gamma
    delta = model.delta
    gp, gm = model.gamma_plus, model.gamma_minus
    alpha = model.meas.alpha
    beta = model.meas.beta
    b1, b2 = beta.real, beta.imag
    beta_sq = b1 ** 2 + b2 ** 2
    half = (gp + g) / 2

    a = np.array(
        [
            [-(half - 2 * b1 ** 2 * g), -(delta + 2 * b1 * b2 * g), 2 * alpha * b1 * g],
            [delta - 2 * b1 * b2 * g, -(half - 2 * b2 ** 2 * g), -2 * alpha * b2 * g],
            [2 * alpha * b1 * g, -2 * alpha * b2 * g, -(gp + 2 * beta_sq * g)],
        ]
    )
    c = np.array([0.0, 0.0, -gm])
    return a, c


def bloch_rhs(state: BlochState, model: QubitModel) -> BlochRates:
    """Right-hand side of the Bloch equations at ``state``."""
    a, c = bloch_generator(model)
    x_dot, y_dot, z_dot = a @ state.as_array() + c
    return BlochRates(float(x_dot), float(y_dot), float(z_dot))


def rk4_step(
    rhs: Callable[[float, np.ndarray], np.ndarray], t: float, y: np.ndarray, h: float
) -> np.ndarray:
    """One classic fourth-order Runge-Kutta step."""
    k1 = rhs(t, y)
    k2 = rhs(t + h / 2, y + h / 2 * k1)
    k3 = rhs(t + h / 2, y + h / 2 * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4_step_map(a: np.ndarray, c: np.ndarray, h: float) -> np.ndarray:
    """
    Homogeneous 4x4 matrix of one RK4 step of r' = A r + c.

    For an affine field the RK4 update is itself affine, so its columns are
    read off by stepping the basis vectors.
    """
    def rhs(_t, r):
        return a @ r + c

    offset = rk4_step(rhs, 0.0, np.zeros(3), h)
    step = np.eye(4)
    for k in range(3):
        step[:3, k] = rk4_step(rhs, 0.0, np.eye(3)[k], h) - offset
    step[:3, 3] = offset
    return step


def default_dt(model: QubitModel) -> float:
    """min(0.01/Delta, 0.1/Gamma~_+)."""
    dt = 0.01 / model.delta
    if model.gamma_plus_tilde > 0:
        dt = min(dt, 0.1 / model.gamma_plus_tilde)
    return dt


def integrate(
    model: QubitModel, init: BlochState, t_end: float, dt: Optional[float] = None
) -> Trajectory:
    """
    Fixed-step RK4 trajectory on t = init.t + k*dt, k = 0..ceil(t_end/dt).

    Steps are iterated as the exact RK4 step map; after ``BLOCK_SIZE`` steps whole
    blocks are advanced with its BLOCK_SIZE-th power.

    Raises:
        DomainError: t_end or dt not positive, or init outside the Bloch ball
        IntegrationError: a non-finite state was produced
    """
    if dt is None:
        dt = default_dt(model)
    if not np.isfinite(t_end) or t_end <= 0:
        raise DomainError(f"t_end must be > 0, got {t_end}")
    if not np.isfinite(dt) or dt <= 0:
        raise DomainError(f"dt must be > 0, got {dt}")
    if not init.is_physical():
        raise DomainError(f"initial state {init} lies outside the Bloch ball")

    n_steps = max(1, int(np.ceil(t_end / dt - 1e-9)))
    times = init.t + dt * np.arange(n_steps + 1)
    a, c = bloch_generator(model)
    step = rk4_step_map(a, c, dt)

    states = np.empty((n_steps + 1, 4))
    states[0] = [init.x, init.y, init.z, 1.0]
    head = min(BLOCK_SIZE, n_steps + 1)
    for k in range(1, head):
        states[k] = step @ states[k - 1]
    if head < n_steps + 1:
        block_map = np.linalg.matrix_power(step, head).T
        for start in range(head, n_steps + 1, head):
            stop = min(start + head, n_steps + 1)
            states[start:stop] = states[start - head:stop - head] @ block_map

    finite = np.isfinite(states).all(axis=1)
    if not finite.all():
        first_bad = int(np.argmin(finite))
        raise IntegrationError(float(times[first_bad]))

    logger.debug(
        "integrated %d RK4 steps of dt=%g for %s", n_steps, dt, model.describe()
    )
    return Trajectory(times=times, states=states[:, :3].copy(), dt=float(dt), method="rk4")


def _case_i_arrays(elapsed: np.ndarray, init: BlochState, model: QubitModel) -> np.ndarray:
    gp, gm = model.gamma_plus, model.gamma_minus
    if gp > 0:
        z_inf = -gm / gp
        z = z_inf + (init.z - z_inf) * np.exp(-gp * elapsed)
    else:
        z = np.full_like(elapsed, init.z)
    decay = np.exp(-(gp + model.meas.gamma) * elapsed / 2)
    cos, sin = np.cos(model.delta * elapsed), np.sin(model.delta * elapsed)
    x = decay * (init.x * cos - init.y * sin)
    y = decay * (init.x * sin + init.y * cos)
    return np.column_stack([x, y, z])


def _case_ii_arrays(elapsed: np.ndarray, init: BlochState, model: QubitModel) -> np.ndarray:
    g = model.meas.gamma
    phi = model.meas.phi
    tilde = model.gamma_plus_tilde
    gm = model.gamma_minus
    if tilde > 0:
        z_inf = -gm / tilde
        z = z_inf + (init.z - z_inf) * np.exp(-tilde * elapsed)
    else:
        z = np.full_like(elapsed, init.z)

    omega = delta_osc(model)
    d = g / 4 * np.cos(2 * phi)
    b = model.delta + g / 4 * np.sin(2 * phi)
    c = model.delta - g / 4 * np.sin(2 * phi)
    decay = np.exp(-tilde * elapsed / 2)
    cos, sin = np.cos(omega * elapsed), np.sin(omega * elapsed)
    x = decay * ((cos + d / omega * sin) * init.x - b / omega * sin * init.y)
    y = decay * (c / omega * sin * init.x + (cos - d / omega * sin) * init.y)
    return np.column_stack([x, y, z])


def delta_osc(model: QubitModel) -> float:
    """Oscillation frequency sqrt(Delta^2 - gamma^2/16) of the equator transient."""
    g = model.meas.gamma
    if model.delta <= g / 4:
        raise ContractError(
            f"oscillation frequency is not real: need Delta > gamma/4 (Delta={model.delta}, gamma={g})"
        )
    return float(np.sqrt(model.delta ** 2 - g ** 2 / 16))


def _require_case_i(model: QubitModel):
    if abs(model.meas.beta) > ZERO_COEFF_TOL:
        raise ContractError(f"case (i) needs beta = 0, got theta={model.meas.theta}")


def _require_case_ii(model: QubitModel):
    if abs(model.meas.alpha) > ZERO_COEFF_TOL:
        raise ContractError(f"case (ii) needs alpha = 0 (theta = pi/2), got theta={model.meas.theta}")


def closed_form_case_i(t: float, init: BlochState, model: QubitModel) -> BlochState:
    """
    Exact solution for a measured pole (beta = 0): z relaxes at Gamma_+, x and y rotate
    at Delta and decay at (Gamma_+ + gamma)/2.
    """
    _require_case_i(model)
    x, y, z = _case_i_arrays(np.array([t - init.t]), init, model)[0]
    return BlochState(float(x), float(y), float(z), float(t))


def closed_form_case_ii(t: float, init: BlochState, model: QubitModel) -> BlochState:
    """
    Exact solution for a measured equator state (alpha = 0).

    Raises:
        ContractError: alpha != 0 or Delta <= gamma/4
    """
    _require_case_ii(model)
    x, y, z = _case_ii_arrays(np.array([t - init.t]), init, model)[0]
    return BlochState(float(x), float(y), float(z), float(t))


def closed_form_trajectory(times: np.ndarray, init: BlochState, model: QubitModel) -> Trajectory:
    """Closed-form trajectory on ``times`` for whichever solvable case ``model`` is in."""
    times = np.asarray(times, dtype=float)
    elapsed = times - init.t
    if abs(model.meas.beta) <= ZERO_COEFF_TOL:
        states = _case_i_arrays(elapsed, init, model)
        method = "closed-form-i"
    else:
        _require_case_ii(model)
        states = _case_ii_arrays(elapsed, init, model)
        method = "closed-form-ii"
    dt = float(times[1] - times[0]) if times.size > 1 else 0.0
    return Trajectory(times=times, states=states, dt=dt, method=method)


def steady_state_denominator(model: QubitModel) -> float:
    """4 Delta^2 (Gamma_+ + 2|beta|^2 gamma) + Gamma_+ (Gamma_+ + gamma)(Gamma_+ + gamma - 2|beta|^2 gamma)."""
    g = model.meas.gamma
    gp = model.gamma_plus
    bsq = model.meas.beta_sq
    return 4 * model.delta ** 2 * (gp + 2 * bsq * g) + gp * (gp + g) * (gp + g - 2 * bsq * g)


def steady_state_bloch(model: QubitModel) -> BlochState:
    """
    Closed-form fixed point of the Bloch equations.

    Raises:
        DegenerateModelError: vanishing denominator (e.g. Gamma_+ = 0 with beta = 0)
    """
    den = steady_state_denominator(model)
    if den <= 0:
        raise DegenerateModelError(f"steady state undefined for {model.describe()}")
    g = model.meas.gamma
    gp, gm = model.gamma_plus, model.gamma_minus
    delta = model.delta
    alpha = model.meas.alpha
    b1, b2 = model.meas.beta.real, model.meas.beta.imag
    bsq = model.meas.beta_sq

    z = -gm * (4 * delta ** 2 + (gp + g) * (gp + g - 4 * bsq * g)) / den
    x = -4 * alpha * g * gm * (2 * delta * b2 + (gp + g) * b1) / den
    y = -4 * alpha * g * gm * (2 * delta * b1 - (gp + g) * b2) / den
    return BlochState(float(x), float(y), float(z))


def damping_coefficients(model: QubitModel) -> DampingCoefficients:
    """Diagonal damping coefficients of (z, x, y), with and without the measurement."""
    g = model.meas.gamma
    gp = model.gamma_plus
    b1, b2 = model.meas.beta.real, model.meas.beta.imag
    return DampingCoefficients(
        z=gp + 2 * (b1 ** 2 + b2 ** 2) * g,
        x=(gp + g) / 2 - 2 * b1 ** 2 * g,
        y=(gp + g) / 2 - 2 * b2 ** 2 * g,
        z_free=gp,
        x_free=gp / 2,
        y_free=gp / 2,
    )


def to_density_matrix(state: BlochState) -> np.ndarray:
    """rho = (I + x sigma_x + y sigma_y + z sigma_z)/2 in the {|e>, |g>} basis."""
    return (np.eye(2) + state.x * SIGMA_X + state.y * SIGMA_Y + state.z * SIGMA_Z) / 2


def from_density_matrix(rho: np.ndarray, t: float = 0.0) -> BlochState:
    rho = np.asarray(rho, dtype=complex)
    return BlochState(
        float(np.trace(rho @ SIGMA_X).real),
        float(np.trace(rho @ SIGMA_Y).real),
        float(np.trace(rho @ SIGMA_Z).real),
        t,
    )


def measurement_projector(meas: MeasurementSpec) -> np.ndarray:
    """P_n = I/2 + alpha sigma_z + beta sigma_+ + beta* sigma_-."""
    alpha, beta = meas.alpha, meas.beta
    return np.eye(2) / 2 + alpha * SIGMA_Z + beta * SIGMA_PLUS + np.conj(beta) * SIGMA_MINUS


def qubit_hamiltonian(delta: float) -> np.ndarray:
    return delta / 2 * SIGMA_Z


def qubit_lindblad_model(model: QubitModel) -> LindbladModel:
    """The same qubit as a generic Lindblad model: sigma_+/sigma_- per bath plus the measurement."""
    channels = []
    for k, pair in enumerate(model.rates):
        channels.append(Channel(SIGMA_PLUS, pair.absorb, label=f"bath{k}-absorb"))
        channels.append(Channel(SIGMA_MINUS, pair.emit, label=f"bath{k}-emit"))
    return LindbladModel(
        hamiltonian=qubit_hamiltonian(model.delta),
        channels=tuple(channels),
        measurement=measurement_channel(measurement_projector(model.meas), model.meas.gamma),
    )
