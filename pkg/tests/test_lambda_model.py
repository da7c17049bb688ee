import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

from src.errors import ColdHotOrderWarning, DomainError
from src.lambda_model import (
    SWEEP_COLUMNS,
    LambdaParams,
    build_lambda_model,
    lambda_heat_current_sweep,
    lambda_rates,
    lambda_steady_state,
    population_inversion_predicted,
)
from src.rates import BathSpec, bath_rates

GAMMAS = np.logspace(-4, -1, 7)


def _equal_baths(temperature: float = 2.0) -> LambdaParams:
    with pytest.warns(ColdHotOrderWarning):
        return LambdaParams(
            hot=BathSpec(0.01, temperature, label="hot"),
            cold=BathSpec(0.01, temperature, label="cold"),
        )


def test_rates_use_each_transition_energy():
    params = LambdaParams()
    rates = lambda_rates(params)
    assert rates.hot == bath_rates(1.0, params.hot)
    assert rates.cold == bath_rates(0.5, params.cold)
    assert rates.hot.absorb / rates.hot.emit == pytest.approx(np.exp(-1.0 / 5.0))
    assert rates.cold.absorb / rates.cold.emit == pytest.approx(np.exp(-0.5 / 2.0))


def test_model_structure():
    params = LambdaParams(gamma=0.02, phi=0.3)
    model = build_lambda_model(params)
    assert model.dim == 3
    assert [ch.label for ch in model.all_channels] == [
        "hot-emit", "hot-absorb", "cold-emit", "cold-absorb", "measurement",
    ]
    assert model.channels[0].operator[0, 2] == 1
    assert model.channels[3].operator[2, 1] == 1
    expected = 0.5 * np.array([[1, np.exp(-0.3j), 0], [np.exp(0.3j), 1, 0], [0, 0, 0]])
    assert_allclose(model.measurement.operator, expected, atol=1e-15)
    assert model.measurement.rate == 0.02
    assert_allclose(np.diag(model.hamiltonian).real, [0.0, 0.5, 1.0])


def test_params_validation():
    with pytest.raises(DomainError):
        LambdaParams(delta_big=1.0, delta_small=1.0)
    with pytest.raises(DomainError):
        LambdaParams(delta_small=0.0)
    with pytest.raises(DomainError):
        LambdaParams(gamma=-0.1)
    with pytest.warns(ColdHotOrderWarning):
        LambdaParams(hot=BathSpec(0.01, 1.0, label="hot"))


def test_inversion_predicate():
    assert population_inversion_predicted(LambdaParams())
    assert not population_inversion_predicted(_equal_baths())
    assert population_inversion_predicted(LambdaParams(cold=BathSpec(0.01, 0.0, label="cold")))


def test_unmeasured_steady_state_is_product_of_detailed_balances():
    rho = lambda_steady_state(LambdaParams()).validate()
    p0, p1, p2 = rho.populations
    assert p2 / p0 == pytest.approx(np.exp(-1.0 / 5.0), rel=1e-9)
    assert p2 / p1 == pytest.approx(np.exp(-0.5 / 2.0), rel=1e-9)
    assert p1 > p0


def test_no_current_without_measurement():
    frame = lambda_heat_current_sweep(LambdaParams(), [0.0])
    assert frame["J_M"].iloc[0] == 0.0
    assert bool(frame["inversion_flag"].iloc[0])


def test_sweep_columns_and_order():
    frame = lambda_heat_current_sweep(LambdaParams(), GAMMAS)
    assert list(frame.columns) == SWEEP_COLUMNS
    assert_allclose(frame["gamma"], GAMMAS)
    assert_allclose(frame[["rho00", "rho11", "rho22"]].sum(axis=1), 1.0, atol=1e-12)


def test_current_is_negative_under_inversion():
    frame = lambda_heat_current_sweep(LambdaParams(), GAMMAS)
    assert (frame["J_M"] < 0).all()
    assert (frame["rho11"] >= frame["rho00"]).all()


def test_current_is_positive_for_equal_temperatures():
    frame = lambda_heat_current_sweep(_equal_baths(), GAMMAS)
    assert (frame["J_M"] > 0).all()
    assert not frame["inversion_flag"].any()


def test_current_follows_lower_level_population_difference():
    params = LambdaParams()
    frame = lambda_heat_current_sweep(params, GAMMAS)
    expected = frame["gamma"] * 0.5 * (frame["rho00"] - frame["rho11"]) / 4
    assert_allclose(frame["J_M"], expected, atol=1e-14)


def test_current_independent_of_phi():
    reference = lambda_heat_current_sweep(LambdaParams(), GAMMAS)["J_M"]
    for phi in (0.7, np.pi / 2, np.pi):
        shifted = lambda_heat_current_sweep(LambdaParams(phi=phi), GAMMAS)["J_M"]
        assert_allclose(shifted, reference, atol=1e-13)


def test_threaded_sweep_matches_serial():
    serial = lambda_heat_current_sweep(LambdaParams(), GAMMAS)
    threaded = lambda_heat_current_sweep(LambdaParams(), GAMMAS, workers=3)
    pd.testing.assert_frame_equal(serial, threaded)


def test_sweep_edge_cases():
    empty = lambda_heat_current_sweep(LambdaParams(), [])
    assert empty.empty
    assert list(empty.columns) == SWEEP_COLUMNS
    with pytest.raises(DomainError):
        lambda_heat_current_sweep(LambdaParams(), [0.01, -0.01])
