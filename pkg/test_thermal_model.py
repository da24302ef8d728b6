import math

import numpy as np
import pytest

from thermal_model import (
    PRESETS,
    ThermalConvergenceError,
    ThermalParameters,
    aging_factor,
    hotspot_step,
    load_thermal_parameters,
    simulate_day,
    top_oil_step,
    ultimate_top_oil_rise,
)

P = PRESETS["onaf-50mva"]


def test_aging_factor_anchors():
    assert aging_factor(110.0) == pytest.approx(1.0, abs=1e-12)
    assert aging_factor(120.0) == pytest.approx(2.7094, rel=1e-3)
    assert aging_factor(80.0) == pytest.approx(0.0358, rel=1e-3)
    assert aging_factor(120.0) == pytest.approx(math.exp(15000 / 383 - 15000 / 393), rel=1e-12)


def test_top_oil_step():
    final = ultimate_top_oil_rise(1.55, P)
    assert final == pytest.approx(110.4, abs=0.1)
    assert top_oil_step(final, 1.55, P) == pytest.approx(final, abs=1e-12)
    assert ultimate_top_oil_rise(1.0, P) == P.dtheta_to_r


def test_hotspot_step():
    assert hotspot_step(1.0, 1.0, P) == pytest.approx(P.dtheta_h_r)
    assert hotspot_step(0.7, 0.7, P) == pytest.approx(P.dtheta_h_r * 0.7 ** (2 * P.m_exp))
    assert hotspot_step(1.0, 1.55, P, dt_hours=1.0) == pytest.approx(25 * 1.55 ** 1.6, abs=0.1)


def test_steady_state_rated_load():
    resultado = simulate_day([1.0] * 24, [30.0] * 24, P)
    assert np.allclose(resultado.theta_h, 110.0, atol=0.05)
    assert resultado.f_eqa == pytest.approx(1.0, abs=1e-3)
    assert resultado.iterations <= 20


def test_result_does_not_depend_on_initial_guess():
    rng = np.random.default_rng(8)
    cargas = rng.uniform(0.3, 1.4, 24)
    ambiente = 10 + 8 * np.sin(2 * np.pi * np.arange(24) / 24)
    a = simulate_day(cargas, ambiente, P, initial_top_oil=0.0)
    b = simulate_day(cargas, ambiente, P, initial_top_oil=50.0)
    assert np.allclose(a.theta_h, b.theta_h, atol=0.01)


def test_zero_load():
    resultado = simulate_day([0.0] * 24, [20.0] * 24, P)
    esperado = P.dtheta_to_r * (1 / (P.loss_ratio + 1)) ** P.n_exp
    assert np.allclose(resultado.dtheta_to, esperado, atol=0.01)
    assert resultado.dtheta_h == (0.0,) * 24
    assert resultado.f_eqa < 0.01


def test_ambient_shift_moves_hotspot_exactly():
    rng = np.random.default_rng(1)
    cargas = rng.uniform(0.2, 1.2, 24)
    ambiente = rng.uniform(-5, 25, 24)
    base = simulate_day(cargas, ambiente, P)
    deslocado = simulate_day(cargas, ambiente + 7.5, P)
    assert np.allclose(np.subtract(deslocado.theta_h, base.theta_h), 7.5, atol=1e-9)


def test_first_hour_uses_last_hour_as_previous_load():
    cargas = [0.5] * 23 + [1.3]
    resultado = simulate_day(cargas, [20.0] * 24, P)
    assert resultado.dtheta_h[0] == pytest.approx(hotspot_step(1.3, 0.5, P))


def test_non_convergence_is_reported():
    with pytest.raises(ThermalConvergenceError) as erro:
        simulate_day([1.0] * 24, [20.0] * 24, P, max_passes=2, tol_c=1e-9)
    assert erro.value.passes == 2


def test_invalid_inputs():
    with pytest.raises(ValueError):
        simulate_day([1.0] * 23, [20.0] * 24, P)
    with pytest.raises(ValueError):
        simulate_day([-0.1] + [1.0] * 23, [20.0] * 24, P)
    with pytest.raises(ValueError):
        ThermalParameters(50, 55, 25, 5, tau_to=0.05, tau_w=0.08, n_exp=0.9, m_exp=0.8)


def test_load_parameters_from_file(tmp_path):
    arquivo = tmp_path / "transformer.env"
    arquivo.write_text("PRESET=onaf-50mva\nRATED_MVA=30\nTAU_TO=2.5\n")
    params = load_thermal_parameters(str(arquivo))
    assert params.rated_mva == 30.0
    assert params.tau_to == 2.5
    assert params.dtheta_to_r == P.dtheta_to_r

    incompleto = tmp_path / "incompleto.env"
    incompleto.write_text("RATED_MVA=30\n")
    with pytest.raises(ValueError):
        load_thermal_parameters(str(incompleto))
    with pytest.raises(ValueError):
        load_thermal_parameters(preset="onan-inexistente")
    assert load_thermal_parameters(preset="onaf-50mva") == P
