import numpy as np
import pytest
import scipy.linalg as la
from numpy.testing import assert_allclose

from src.bloch import BlochState, integrate, qubit_lindblad_model, steady_state_bloch, to_density_matrix
from src.errors import ContractError, ConvergenceError, DomainError
from src.heat import (
    HeatSeries,
    excess_heat,
    excess_heat_exact,
    excess_heat_max,
    generator_tail_rate,
    heat_current_bounds,
    heat_current_general,
    heat_current_instant,
    heat_series,
    heat_series_general,
    photon_transfer_rates,
    steady_state_heat_current,
    stored_energy_shift,
    transient_heat_current_equator,
)
from src.lindblad import DensityMatrix, build_liouvillian, evolve
from src.selftest import DEFAULT_SEED, generic_steady_current, random_qubit_model, steady_formula_spread


def test_instant_current_examples(figure_model):
    equator = figure_model(np.pi / 2)
    assert heat_current_instant(BlochState(0, 0, -1), equator.meas, 1.0) == pytest.approx(0.0025)
    assert heat_current_instant(BlochState(0, 0, -0.5), equator.meas, 1.0) == pytest.approx(1.25e-3)
    pole = figure_model(0.0)
    assert heat_current_instant(BlochState(0.3, -0.2, 0.5), pole.meas, 1.0) == 0.0


def test_instant_matches_trace_formula(rng):
    for _ in range(20):
        model = random_qubit_model(rng)
        channel = qubit_lindblad_model(model).measurement
        state = BlochState(*(rng.uniform(-0.5, 0.5, size=3)))
        energies = [model.delta / 2, -model.delta / 2]
        general = heat_current_general(channel, to_density_matrix(state), energies)
        assert general == pytest.approx(heat_current_instant(state, model.meas, model.delta), abs=1e-15)


def test_general_current_in_eigenbasis(figure_model):
    model = figure_model(np.pi / 3)
    lindblad_model = qubit_lindblad_model(model)
    energies, basis = la.eigh(lindblad_model.hamiltonian)
    rho = to_density_matrix(BlochState(0.1, 0.2, -0.6))
    expected = heat_current_general(lindblad_model.measurement, rho, [0.5, -0.5])
    assert heat_current_general(lindblad_model.measurement, rho, energies, basis) == pytest.approx(expected, abs=1e-15)
    with pytest.raises(DomainError):
        heat_current_general(lindblad_model.measurement, rho, [0.5, -0.5, 1.0])


def test_steady_current_examples(figure_model):
    assert steady_state_heat_current(figure_model(np.pi / 2)) == pytest.approx(1e-3, rel=1e-12)
    assert steady_state_heat_current(figure_model(0.0)) == 0.0
    assert steady_state_heat_current(figure_model(np.pi)) == pytest.approx(0.0, abs=1e-20)
    assert steady_state_heat_current(figure_model(np.pi / 2, gamma=0.0)) == 0.0


def test_steady_current_symmetric_in_theta(figure_model):
    for theta in (0.2, 0.7, 1.3):
        assert steady_state_heat_current(figure_model(theta)) == pytest.approx(
            steady_state_heat_current(figure_model(np.pi - theta)), rel=1e-12
        )


def test_steady_current_paths_agree(rng):
    for _ in range(20):
        model = random_qubit_model(rng)
        closed = steady_state_heat_current(model)
        instant = heat_current_instant(steady_state_bloch(model), model.meas, model.delta)
        assert instant == pytest.approx(closed, rel=1e-10, abs=1e-18)
        assert generic_steady_current(model) == pytest.approx(closed, rel=1e-9)


def test_steady_current_paths_agree_over_seeded_models():
    rng = np.random.default_rng(DEFAULT_SEED)
    spreads = [steady_formula_spread(random_qubit_model(rng)) for _ in range(200)]
    assert max(spreads) <= 1e-9


def test_steady_current_within_bounds(rng):
    for _ in range(50):
        model = random_qubit_model(rng)
        lower, upper = heat_current_bounds(model)
        current = steady_state_heat_current(model)
        assert lower <= current <= upper * (1 + 1e-12)


def test_upper_bound_value(figure_model):
    assert heat_current_bounds(figure_model(np.pi / 2)) == pytest.approx((0.0, 1e-3))


def test_current_independent_of_phi(figure_model):
    reference = generic_steady_current(figure_model(np.pi / 3))
    for phi in (0.5, np.pi / 2, 3.0):
        assert steady_state_heat_current(figure_model(np.pi / 3, phi=phi)) == pytest.approx(
            steady_state_heat_current(figure_model(np.pi / 3)), rel=1e-14
        )
        assert generic_steady_current(figure_model(np.pi / 3, phi=phi)) == pytest.approx(reference, abs=1e-12)


def test_equator_transient_current(figure_model):
    model = figure_model(np.pi / 2)
    assert transient_heat_current_equator(0.0, -0.5, model) == pytest.approx(1.25e-3)
    assert transient_heat_current_equator(1e5, -0.5, model) == pytest.approx(1e-3, rel=1e-12)
    values = transient_heat_current_equator(np.array([0.0, 40.0]), -0.5, model)
    assert values.shape == (2,)
    assert values[1] == pytest.approx(1e-3 + 2.5e-4 * np.exp(-1.0))
    with pytest.raises(ContractError):
        transient_heat_current_equator(0.0, -0.5, figure_model(np.pi / 3))


def test_heat_series_matches_equator_transient(figure_model):
    model = figure_model(np.pi / 2)
    trajectory = integrate(model, BlochState(0, 0, -0.5), 200.0, 0.05)
    series = heat_series(trajectory, model)
    assert series.steady_value == pytest.approx(1e-3)
    assert_allclose(series.values, transient_heat_current_equator(series.times, -0.5, model), atol=1e-10)
    assert list(series.to_frame().columns) == ["t", "J_M"]


def test_heat_series_general_matches_equator_transient(figure_model):
    model = figure_model(np.pi / 2)
    lindblad_model = qubit_lindblad_model(model)
    liouvillian = build_liouvillian(lindblad_model)
    energies, basis = la.eigh(lindblad_model.hamiltonian)
    times = np.linspace(0, 100, 51)
    states = evolve(liouvillian, DensityMatrix(to_density_matrix(BlochState(0, 0, -0.5))), times)
    series = heat_series_general(times, states, lindblad_model.measurement, energies, liouvillian, 1e-3, basis)
    assert_allclose(series.values, transient_heat_current_equator(times, -0.5, model), atol=1e-12)
    assert series.scale == pytest.approx(0.01)


def test_excess_heat_of_exponential():
    times = np.linspace(0, 20, 2001)
    series = HeatSeries(times, 1.0 + 0.5 * np.exp(-times), steady_value=1.0, tail_rate=1.0, scale=1.0)
    result = excess_heat(series)
    assert result.value == pytest.approx(0.5, abs=1e-8)
    assert result.tail == pytest.approx(0.5 * np.exp(-20), rel=1e-9)


def test_excess_heat_not_converged():
    times = np.linspace(0, 5, 501)
    series = HeatSeries(times, 1.0 + 0.5 * np.exp(-times), steady_value=1.0, tail_rate=1.0, scale=1.0)
    with pytest.raises(ConvergenceError) as excinfo:
        excess_heat(series)
    assert excinfo.value.tail_bound == pytest.approx(0.5 * np.exp(-5))


def test_heat_series_validation():
    with pytest.raises(DomainError):
        HeatSeries(np.array([0.0, 1.0]), np.array([1.0, 1.0]), 1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        HeatSeries(np.array([0.0, 2.0, 1.0]), np.zeros(3), 0.0, 1.0, 1.0)


def test_excess_heat_at_equator(figure_model):
    model = figure_model(np.pi / 2)
    init = BlochState(0.0, 0.0, -0.5)
    assert excess_heat_max(model) == pytest.approx(0.01, rel=1e-12)
    assert excess_heat_exact(model, init) == pytest.approx(0.01, rel=1e-10)
    trajectory = integrate(model, init, 12 / model.gamma_plus, 0.05)
    assert excess_heat(heat_series(trajectory, model)).value == pytest.approx(0.01, rel=1e-6)


def test_excess_heat_exact_vanishes_from_steady_state(figure_model):
    model = figure_model(np.pi / 4)
    assert excess_heat_exact(model, steady_state_bloch(model)) == pytest.approx(0.0, abs=1e-15)


def test_tail_rate_is_slowest_bloch_mode(figure_model):
    # x and y rotate into each other, so the pair decays at the mean of their two rates
    assert generator_tail_rate(figure_model(np.pi / 2)) == pytest.approx(0.0125)


def test_photon_transfer_rates(figure_model):
    model = figure_model(np.pi / 2)
    absorb, emit = photon_transfer_rates(model)
    assert (absorb, emit) == pytest.approx((1.5e-3, 5e-4))
    assert model.delta * (absorb - emit) == pytest.approx(heat_current_bounds(model)[1])


def test_stored_energy_shift(figure_model):
    model = figure_model(np.pi / 2)
    stored = stored_energy_shift(model)
    assert stored.before == pytest.approx(-0.25)
    assert stored.after == pytest.approx(-0.2)
    assert stored.measurement_share == pytest.approx(0.2)
    assert stored.measurement_heat == pytest.approx(excess_heat_max(model))
