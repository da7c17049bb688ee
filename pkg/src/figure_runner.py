"""
Scenario runners: turn a validated scenario into a result table plus a scalar summary.

Sweep points go through a thread pool when ``workers > 1``; rows always come
back in input order.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import pandas as pd
import scipy.linalg as la

from src.bloch import BlochState, QubitModel, integrate, steady_state_bloch
from src.errors import ConvergenceError, DegenerateModelError
from src.heat import (
    excess_heat,
    excess_heat_max,
    heat_current_bounds,
    heat_current_general,
    heat_series,
    heat_series_general,
    steady_state_heat_current,
)
from src.lambda_model import lambda_heat_current_sweep, population_inversion_predicted
from src.lindblad import (
    Channel,
    DensityMatrix,
    LindbladModel,
    build_liouvillian,
    cptp_diagnostics,
    evolve,
    measurement_channel,
    state_projector,
    steady_state,
)
from src.parallel import map_points
from src.rates import MeasurementSpec
from src.scenario_config import (
    CustomConfig,
    ExcessSweepConfig,
    LambdaSweepConfig,
    SteadySweepConfig,
    TransientConfig,
    to_complex_array,
)

logger = logging.getLogger(__name__)

# Relaxation horizon of the excess-heat integral, in units of 1/min(Gamma_+, Gamma~_+).
EXCESS_HORIZON = 12.0


@dataclass
class RunResult:
    """Table written as CSV, summary written as JSON, parameter echo for both."""

    name: str
    frame: pd.DataFrame
    summary: Dict[str, Any] = field(default_factory=dict)
    params: Dict[str, Any] = field(default_factory=dict)


def _column_names(prefix: str, count: int) -> List[str]:
    if count == 1:
        return [prefix]
    return [f"{prefix}_gamma{k + 1}" for k in range(count)]


def _unmeasured_steady_state(model: QubitModel) -> BlochState:
    free = model.with_measurement(MeasurementSpec(gamma=0.0, theta=model.meas.theta, phi=model.meas.phi))
    return steady_state_bloch(free)


def run_fig2b(config: SteadySweepConfig) -> RunResult:
    """Steady-state J_M over a theta grid on [0, pi], one column per gamma."""
    thetas = np.linspace(0.0, np.pi, config.theta_points)
    frame = pd.DataFrame({"theta": thetas})
    upper_bounds = []
    for k, gamma in enumerate(config.gammas):
        currents = map_points(
            lambda theta, g=gamma: steady_state_heat_current(config.qubit_model(g, theta)),
            thetas,
            config.workers,
        )
        frame[f"J_M_gamma{k + 1}"] = currents
        upper_bounds.append(heat_current_bounds(config.qubit_model(gamma, np.pi / 2))[1])

    summary = {
        "gammas": list(config.gammas),
        "J_M_max": upper_bounds,
        "J_M_peak": [float(frame[col].max()) for col in frame.columns[1:]],
    }
    logger.info("steady sweep: %d thetas x %d gammas", len(thetas), len(config.gammas))
    return RunResult("fig2b", frame, summary, config.params_echo())


def run_fig4(config: TransientConfig, name: str = "fig4") -> RunResult:
    """J_M(t) after switching on the measurement, one column per theta."""

    def simulate(theta: float):
        model = config.qubit_model(config.gamma, theta)
        if config.initial == "sigma_x":
            init = BlochState(1.0, 0.0, 0.0)
        elif config.initial == "unmeasured_steady":
            init = _unmeasured_steady_state(model)
        else:
            init = BlochState(*config.initial)
        return heat_series(integrate(model, init, config.t_end, config.dt), model)

    series = map_points(simulate, config.thetas, config.workers)
    frame = pd.DataFrame({"t": series[0].times})
    summary: Dict[str, Any] = {"thetas": list(config.thetas), "J_M_initial": [], "J_M_steady": [], "J_M_min": []}
    for k, item in enumerate(series):
        frame[f"J_M_theta{k + 1}"] = item.values
        summary["J_M_initial"].append(float(item.values[0]))
        summary["J_M_steady"].append(float(item.steady_value))
        summary["J_M_min"].append(float(item.values.min()))
    logger.info("transient run: %d thetas, %d samples", len(series), len(frame))
    return RunResult(name, frame, summary, config.params_echo())


def run_qex(config: ExcessSweepConfig) -> RunResult:
    """Excess heat from the measurement-free steady state over a theta grid."""
    thetas = np.linspace(0.0, np.pi, config.theta_points)
    frame = pd.DataFrame({"theta": thetas})
    errors = [""] * len(thetas)
    maxima = []
    for k, (gamma, column) in enumerate(zip(config.gammas, _column_names("Q_ex", len(config.gammas)))):

        def point(theta: float, g=gamma):
            model = config.qubit_model(g, theta)
            horizon = min(model.gamma_plus, model.gamma_plus_tilde)
            if horizon <= 0:
                raise DegenerateModelError("Gamma_+ = 0: measurement-free steady state undefined")
            t_end = config.t_end or EXCESS_HORIZON / horizon
            trajectory = integrate(model, _unmeasured_steady_state(model), t_end, config.dt)
            try:
                return excess_heat(heat_series(trajectory, model)).value, ""
            except ConvergenceError as exc:
                logger.warning("excess heat not converged at theta=%.6g: %s", theta, exc)
                return np.nan, f"gamma{k + 1}: {exc}"

        results = map_points(point, thetas, config.workers)
        frame[column] = [value for value, _ in results]
        for row, (_, message) in enumerate(results):
            if message:
                errors[row] = "; ".join(filter(None, [errors[row], message]))
        maxima.append(excess_heat_max(config.qubit_model(gamma, np.pi / 2)))

    if any(errors):
        frame["error"] = errors
    summary = {
        "gammas": list(config.gammas),
        "Q_ex_max": maxima,
        "Q_ex_peak": [float(frame[col].max()) for col in _column_names("Q_ex", len(config.gammas))],
        "unconverged_rows": int(sum(bool(e) for e in errors)),
    }
    return RunResult("qex", frame, summary, config.params_echo())


def run_lambda(config: LambdaSweepConfig) -> RunResult:
    """Steady-state J_M of the Lambda model over the gamma grid."""
    params = config.lambda_params()
    gammas = config.gamma_grid()
    frame = lambda_heat_current_sweep(params, gammas, workers=config.workers)
    summary = {
        "inversion_predicted": population_inversion_predicted(params),
        "J_M_min": float(frame["J_M"].min()),
        "J_M_max": float(frame["J_M"].max()),
        "all_negative": bool((frame["J_M"] < 0).all()),
    }
    echo = config.params_echo()
    echo["gamma_grid"] = [float(g) for g in gammas]
    return RunResult("lambda", frame, summary, echo)


def custom_model(config: CustomConfig) -> LindbladModel:
    """Generic Lindblad model described by a custom scenario."""
    dim = config.dim
    channels = tuple(
        Channel(ch.matrix(dim), ch.rate, label=ch.label or f"channel{k}")
        for k, ch in enumerate(config.channels)
    )
    meas = config.measurement
    projector = (
        state_projector(to_complex_array(meas.state))
        if meas.state is not None
        else to_complex_array(meas.projector)
    )
    return LindbladModel(
        hamiltonian=to_complex_array(config.hamiltonian),
        channels=channels,
        measurement=measurement_channel(projector, meas.gamma),
    )


def run_custom(config: CustomConfig) -> RunResult:
    """Steady state, time series, heat current and CPTP diagnostics of a custom model."""
    model = custom_model(config)
    liouvillian = build_liouvillian(model)
    energies, basis = la.eigh(model.hamiltonian)
    summary: Dict[str, Any] = {"dim": model.dim, "energies": [float(e) for e in energies]}

    rho_ss: Optional[DensityMatrix] = None
    current_ss = np.nan
    if config.steady_state:
        rho_ss = steady_state(liouvillian)
        current_ss = heat_current_general(model.measurement, rho_ss, energies, basis)
        summary["steady_state"] = {
            "J_M": current_ss,
            "populations": [float(p) for p in rho_ss.populations],
            "rho_real": rho_ss.entries.real.tolist(),
            "rho_imag": rho_ss.entries.imag.tolist(),
        }

    if config.t_end is None:
        frame = pd.DataFrame([{"J_M": current_ss, **_population_columns(rho_ss.populations)}])
        return RunResult("run", frame, summary, config.params_echo())

    dt = config.dt or config.t_end / 1000
    times = dt * np.arange(int(np.ceil(config.t_end / dt - 1e-9)) + 1)
    if config.initial_rho is not None:
        rho0 = DensityMatrix(to_complex_array(config.initial_rho))
    else:
        rho0 = DensityMatrix.from_state(to_complex_array(config.initial_state))
    states = evolve(liouvillian, rho0, times)
    diagnostics = cptp_diagnostics(states)
    summary["cptp"] = diagnostics._asdict()

    series = heat_series_general(
        times, states, model.measurement, energies, liouvillian,
        steady_value=current_ss if rho_ss is not None else 0.0, basis=basis,
    )
    if rho_ss is not None:
        try:
            summary["excess_heat"] = excess_heat(series)._asdict()
        except ConvergenceError as exc:
            summary["excess_heat"] = {"error": str(exc)}

    frame = pd.DataFrame({"t": times, "J_M": series.values})
    populations = np.array([rho.populations for rho in states])
    for k in range(model.dim):
        frame[f"p{k}"] = populations[:, k]
    return RunResult("run", frame, summary, config.params_echo())


def _population_columns(populations: np.ndarray) -> Dict[str, float]:
    return {f"p{k}": float(p) for k, p in enumerate(populations)}


RUNNERS: Dict[str, Callable[..., RunResult]] = {
    "fig2b": run_fig2b,
    "fig4a": lambda config: run_fig4(config, name="fig4a"),
    "fig4b": lambda config: run_fig4(config, name="fig4b"),
    "qex": run_qex,
    "lambda": run_lambda,
    "run": run_custom,
}
