"""
Cross-checks between the closed forms, the Bloch integrator and the generic
Lindblad engine, at sizes small enough to run in a few seconds.
"""

import logging
import warnings
from typing import Callable, List, Tuple

import numpy as np
import pandas as pd
import scipy.linalg as la

from src.bloch import (
    BlochState,
    QubitModel,
    closed_form_trajectory,
    integrate,
    qubit_lindblad_model,
    steady_state_bloch,
)
from src.heat import (
    excess_heat,
    excess_heat_exact,
    excess_heat_max,
    heat_current_bounds,
    heat_current_general,
    heat_current_instant,
    heat_series,
    steady_state_heat_current,
    transient_heat_current_equator,
)
from src.lambda_model import LambdaParams, build_lambda_model, lambda_heat_current_sweep
from src.lindblad import (
    Channel,
    DensityMatrix,
    LindbladModel,
    build_liouvillian,
    cptp_diagnostics,
    evolve,
    steady_state,
)
from src.rates import BathSpec, MeasurementSpec

logger = logging.getLogger(__name__)

DEFAULT_SEED = 20240917


def random_qubit_model(rng: np.random.Generator, delta: float = 1.0) -> QubitModel:
    """theta, phi uniform; gamma, Gamma_+ log-uniform in [1e-4, 1e-1]; Gamma_- uniform in [0, Gamma_+]."""
    theta = rng.uniform(0, np.pi)
    phi = rng.uniform(0, 2 * np.pi)
    gamma = 10 ** rng.uniform(-4, -1)
    gamma_plus = 10 ** rng.uniform(-4, -1)
    gamma_minus = rng.uniform(0, gamma_plus)
    return QubitModel.from_aggregates(delta, gamma_plus, gamma_minus, MeasurementSpec(gamma, theta, phi))


def random_density_matrix(rng: np.random.Generator, dim: int) -> DensityMatrix:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return DensityMatrix(rho / np.trace(rho).real)


def random_lindblad_model(rng: np.random.Generator, dim: int) -> LindbladModel:
    """Random Hermitian H and one to three random channels."""
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    channels = []
    for k in range(int(rng.integers(1, 4))):
        op = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(dim)
        channels.append(Channel(op, rng.uniform(0.05, 1.0), label=f"random{k}"))
    return LindbladModel(hamiltonian=(a + a.conj().T) / 2, channels=tuple(channels))


def generic_steady_current(model: QubitModel) -> float:
    lindblad_model = qubit_lindblad_model(model)
    rho = steady_state(build_liouvillian(lindblad_model))
    energies, basis = la.eigh(lindblad_model.hamiltonian)
    return heat_current_general(lindblad_model.measurement, rho, energies, basis)


def steady_formula_spread(model: QubitModel) -> float:
    """Largest pairwise relative deviation of the three steady-current paths."""
    values = np.array([
        steady_state_heat_current(model),
        heat_current_instant(steady_state_bloch(model), model.meas, model.delta),
        generic_steady_current(model),
    ])
    return float(np.ptp(values) / np.max(np.abs(values)))


def _check_steady_agreement(rng, n_models: int = 200) -> float:
    return max(steady_formula_spread(random_qubit_model(rng)) for _ in range(n_models))


def _check_bounds(rng, n_models: int = 50) -> float:
    worst = 0.0
    for _ in range(n_models):
        model = random_qubit_model(rng)
        lower, upper = heat_current_bounds(model)
        current = steady_state_heat_current(model)
        worst = max(worst, lower - current, current - upper)
        equator = model.with_measurement(MeasurementSpec(model.meas.gamma, np.pi / 2, model.meas.phi))
        worst = max(worst, abs(steady_state_heat_current(equator) - upper))
        pole = model.with_measurement(MeasurementSpec(model.meas.gamma, 0.0, model.meas.phi))
        worst = max(worst, abs(steady_state_heat_current(pole)))
    return worst


def _figure_model(theta: float, phi: float = 0.0) -> QubitModel:
    return QubitModel.from_aggregates(1.0, 0.02, 0.01, MeasurementSpec(0.01, theta, phi))


def _check_transient_closed_forms() -> float:
    init = BlochState(0.6, 0.0, -0.8)
    worst = 0.0
    for theta, phi in [(0.0, 0.0), (np.pi, 0.0), (np.pi / 2, 0.0), (np.pi / 2, np.pi / 3)]:
        model = _figure_model(theta, phi)
        trajectory = integrate(model, init, 10 / model.gamma_plus_tilde, 0.01)
        exact = closed_form_trajectory(trajectory.times, init, model)
        worst = max(worst, float(np.max(np.abs(trajectory.states - exact.states))))
    return worst


def _check_equator_current() -> float:
    model = _figure_model(np.pi / 2)
    z0 = -model.gamma_minus / model.gamma_plus
    trajectory = integrate(model, BlochState(0.0, 0.0, z0), 10 / model.gamma_plus_tilde, 0.01)
    series = heat_series(trajectory, model)
    exact = transient_heat_current_equator(series.times, z0, model)
    initial_error = abs(series.values[0] - 1.25e-3)
    return float(max(np.max(np.abs(series.values - exact)), initial_error))


def _check_excess_heat() -> float:
    model = _figure_model(np.pi / 2)
    init = BlochState(0.0, 0.0, -model.gamma_minus / model.gamma_plus)
    trajectory = integrate(model, init, 12 / model.gamma_plus, 0.01)
    target = excess_heat_max(model)
    quadrature = excess_heat(heat_series(trajectory, model)).value
    exact = excess_heat_exact(model, init)
    return float(max(abs(quadrature - target), abs(exact - target), abs(target - 0.01)) / 0.01)


def _check_lambda_sign() -> float:
    """Positive value means a sign-law violation."""
    gammas = np.logspace(-4, -1, 5)
    inverted = lambda_heat_current_sweep(LambdaParams(), gammas)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        equal_baths = LambdaParams(
            hot=BathSpec(0.01, 2.0, label="hot"), cold=BathSpec(0.01, 2.0, label="cold")
        )
        balanced = lambda_heat_current_sweep(equal_baths, gammas)
    violation = max(
        float(inverted["J_M"].max()),
        float((inverted["rho00"] - inverted["rho11"]).max()),
        float(-balanced["J_M"].min()),
    )
    return violation


def _cptp_runs(rng, n_models: int = 20) -> Tuple[float, float, float]:
    """(worst trace/Hermiticity drift, worst negative eigenvalue, worst semigroup defect)."""
    drift = negativity = semigroup = 0.0
    for _ in range(n_models):
        dim = int(rng.integers(2, 5))
        liouvillian = build_liouvillian(random_lindblad_model(rng, dim))
        rate = liouvillian.slowest_decay_rate() or 1.0
        rho0 = random_density_matrix(rng, dim)
        diagnostics = cptp_diagnostics(evolve(liouvillian, rho0, np.linspace(0, 20 / rate, 41)))
        drift = max(drift, diagnostics.trace_drift, diagnostics.hermiticity_drift)
        negativity = max(negativity, -diagnostics.min_eigenvalue)
        t1, t2 = rng.uniform(0.1, 5.0, size=2)
        two_steps = evolve(liouvillian, rho0, [t1, t1 + t2])[-1].entries
        one_step = evolve(liouvillian, rho0, [t1 + t2])[-1].entries
        semigroup = max(semigroup, float(np.max(np.abs(two_steps - one_step))))
    return drift, negativity, semigroup


def _check_phi_invariance() -> float:
    phis = [0.0, np.pi / 4, np.pi / 2, np.pi]
    qubit = [generic_steady_current(_figure_model(np.pi / 3, phi)) for phi in phis]
    lam = []
    for phi in phis:
        params = LambdaParams(gamma=0.01, phi=phi)
        model = build_lambda_model(params)
        rho = steady_state(build_liouvillian(model))
        lam.append(heat_current_general(model.measurement, rho, params.energies))
    return float(max(np.ptp(qubit), np.ptp(lam)) / 0.01)


def run_selftest(seed: int = DEFAULT_SEED) -> pd.DataFrame:
    """
    Run every cross-check with a fixed seed.

    Returns:
        DataFrame with columns check, value, tolerance, passed
        (a check passes when value <= tolerance)
    """
    rng = np.random.default_rng(seed)
    cptp: List[float] = []

    def cptp_part(index: int) -> Callable[[], float]:
        def value() -> float:
            if not cptp:
                cptp.extend(_cptp_runs(rng))
            return cptp[index]
        return value

    checks: List[Tuple[str, Callable[[], float], float]] = [
        ("steady_formula_agreement", lambda: _check_steady_agreement(rng), 1e-9),
        ("steady_current_bounds", lambda: _check_bounds(rng), 1e-12),
        ("transient_closed_forms", _check_transient_closed_forms, 1e-8),
        ("equator_transient_current", _check_equator_current, 1e-8),
        ("excess_heat_equator", _check_excess_heat, 1e-5),
        ("lambda_sign_law", _check_lambda_sign, 0.0),
        ("cptp_drift", cptp_part(0), 1e-9),
        ("cptp_negativity", cptp_part(1), 1e-8),
        ("semigroup", cptp_part(2), 1e-10),
        ("phi_invariance", _check_phi_invariance, 1e-12),
    ]
    rows = []
    for name, check, tolerance in checks:
        value = check()
        passed = value <= tolerance
        logger.info("selftest %s: %.3e (tol %.1e) %s", name, value, tolerance, "ok" if passed else "FAILED")
        rows.append({"check": name, "value": value, "tolerance": tolerance, "passed": bool(passed)})
    return pd.DataFrame(rows)
