import datetime
import logging
import math

import numpy as np
import pytest

from data_ingestion import DayType, HourlyTemperatureDay, date_for_day_index
from temperature_profiles import (
    HIGH,
    LOW,
    MEDIUM,
    SCENARIOS,
    AnnualTemperatureScenario,
    DayFeatures,
    FeatureNormalizer,
    build_all_scenarios,
    build_scenario_profile,
    compute_day_features,
    find_similar_days,
    fit_normalizer,
    scenario_from_year,
)

ANOS = (2011, 2012, 2013, 2014, 2015)


def _historico(deslocamentos, anos=ANOS):
    """Um ano de dias por ano do histórico; cada ano somado ao seu deslocamento."""
    dias = []
    for ano, deslocamento in zip(anos, deslocamentos):
        for d in range(1, 366):
            base = 5.0 - 12.0 * math.cos(2 * math.pi * d / 365) + deslocamento
            temps = tuple(round(base + 4.0 * math.sin(2 * math.pi * h / 24), 3) for h in range(24))
            dias.append(HourlyTemperatureDay(date=date_for_day_index(ano, d), temps=temps))
    return dias


def test_dominant_year_is_reproduced_by_high_scenario():
    dias = _historico((0.0, 1.0, 10.0, -1.0, 2.0))
    fonte = {dia.date: dia for dia in dias}
    alto = build_scenario_profile(dias, HIGH)
    for data, dia in alto.days:
        assert data.year == 2013
        assert dia.temps == fonte[data].temps


def test_scenarios_keep_daily_mean_dominance():
    rng = np.random.default_rng(3)
    dias = [
        HourlyTemperatureDay(date=dia.date, temps=tuple(t + float(rng.normal(0, 3)) for t in dia.temps))
        for dia in _historico((0.0,) * 5)
    ]
    cenarios = build_all_scenarios(dias)
    for d in range(1, 366):
        alto, medio, baixo = (cenarios[nome].day(d)[1].daily_mean for nome in (HIGH, MEDIUM, LOW))
        assert alto >= medio >= baixo


def test_medium_picks_median_year():
    dias = _historico((1.0, 5.0, 3.0, 2.0, 4.0))
    medio = build_scenario_profile(dias, MEDIUM)
    assert {data.year for data, _ in medio.days} == {2013}


def test_medium_takes_lower_median_with_even_years():
    dias = _historico((1.0, 2.0, 3.0, 4.0), anos=ANOS[:4])
    medio = build_scenario_profile(dias, MEDIUM)
    assert {data.year for data, _ in medio.days} == {2012}


def test_offset_shifts_every_hour():
    dias = _historico((0.0, 1.0, 2.0, 3.0, 4.0))
    base = build_all_scenarios(dias)
    com_offset = build_all_scenarios(dias, offset_c=1.0)
    for nome in SCENARIOS:
        for (data_a, dia_a), (data_b, dia_b) in zip(base[nome].days, com_offset[nome].days):
            assert data_a == data_b
            assert np.allclose(np.subtract(dia_b.temps, dia_a.temps), 1.0, rtol=0.0, atol=1e-12)


def test_single_year_history_gives_identical_scenarios(caplog):
    dias = _historico((0.0,), anos=(2016,))
    with caplog.at_level(logging.WARNING):
        cenarios = build_all_scenarios(dias)
    assert cenarios[HIGH].days == cenarios[MEDIUM].days == cenarios[LOW].days
    assert any("1 anos" in r.getMessage() for r in caplog.records)


def test_missing_day_in_every_year_is_an_error():
    dias = [dia for dia in _historico((0.0, 1.0)) if dia.date.month != 6 or dia.date.day != 15]
    with pytest.raises(ValueError):
        build_scenario_profile(dias, HIGH)


def test_unknown_scenario():
    with pytest.raises(ValueError):
        build_scenario_profile(_historico((0.0,), anos=(2016,)), "tepid")


def test_scenario_from_year_uses_that_year_only():
    dias = _historico((0.0, 3.0))
    real = scenario_from_year(dias, 2012)
    assert {data.year for data, _ in real.days} == {2012}
    with pytest.raises(ValueError):
        scenario_from_year(dias, 2014)


def test_day_features():
    constante = HourlyTemperatureDay(date=datetime.date(2017, 7, 2), temps=(10.0,) * 24)
    f = compute_day_features(constante, 183, DayType.WORKDAY)
    assert (f.t_avg, f.t_max, f.t_min) == (10.0, 10.0, 10.0)
    assert f.day_of_year_feature == pytest.approx(math.sin(2 * math.pi * 183 / 365))

    meio_dia = HourlyTemperatureDay(date=datetime.date(2017, 1, 1), temps=(0.0,) * 12 + (24.0,) + (0.0,) * 11)
    f = compute_day_features(meio_dia, 1, DayType.HOLIDAY)
    assert (f.t_avg, f.t_max, f.t_min) == (1.0, 24.0, 0.0)
    assert f.day_of_year_feature == pytest.approx(0.017213, abs=1e-6)


def test_normalizer_midpoint_endpoints_and_constant_feature():
    corpus = np.array([[t, 3.0] for t in range(21)], dtype=float)
    normalizador = FeatureNormalizer.from_matrix(corpus)
    assert normalizador.normalize([10.0, 3.0]).tolist() == [0.5, 0.0]
    assert normalizador.normalize([0.0, 3.0])[0] == 0.0
    assert normalizador.normalize([20.0, 3.0])[0] == 1.0


def test_fit_normalizer_needs_two_records():
    f = compute_day_features(HourlyTemperatureDay(date=datetime.date(2017, 1, 1), temps=(1.0,) * 24), 1, DayType.HOLIDAY)
    with pytest.raises(ValueError):
        fit_normalizer([f])


def _features(valor, tipo=DayType.WORKDAY):
    return DayFeatures(t_avg=valor, t_max=valor, t_min=valor, day_of_year_feature=valor, day_type=tipo)


IDENTIDADE = FeatureNormalizer(mins=(0.0,) * 4, maxs=(1.0,) * 4)


def test_similar_days_distance_ordering():
    historico = [
        (datetime.date(2016, 1, 4), _features(0.0)),
        (datetime.date(2016, 1, 5), _features(0.4)),
    ]
    similares = find_similar_days(_features(0.5), historico, IDENTIDADE, count=2)
    assert similares.dates == (datetime.date(2016, 1, 5), datetime.date(2016, 1, 4))
    assert similares.distances == pytest.approx((0.2, 1.0))
    assert not similares.flagged


def test_similar_days_identical_target_first_and_ties_prefer_recent():
    historico = [
        (datetime.date(2015, 3, 2), _features(0.3)),
        (datetime.date(2016, 3, 1), _features(0.3)),
        (datetime.date(2016, 3, 2), _features(0.7)),
    ]
    similares = find_similar_days(_features(0.3), historico, IDENTIDADE, count=3)
    assert similares[0] == datetime.date(2016, 3, 1)
    assert similares[1] == datetime.date(2015, 3, 2)
    assert similares.distances[0] == 0.0


def test_similar_days_respect_day_type_and_flag_short_lists():
    historico = [
        (datetime.date(2016, 3, 5), _features(0.5, DayType.HOLIDAY)),
        (datetime.date(2016, 3, 7), _features(0.9)),
        (datetime.date(2016, 3, 8), _features(0.1)),
    ]
    similares = find_similar_days(_features(0.5), historico, IDENTIDADE, count=5)
    assert set(similares.dates) == {datetime.date(2016, 3, 7), datetime.date(2016, 3, 8)}
    assert similares.flagged
    with pytest.raises(ValueError):
        find_similar_days(_features(0.5, DayType.HOLIDAY), historico[1:], IDENTIDADE)


def _atributos(media, maxima, minima, y, tipo=DayType.WORKDAY):
    return DayFeatures(t_avg=media, t_max=maxima, t_min=minima, day_of_year_feature=y, day_type=tipo)


def test_normalizer_including_extends_range():
    normalizador = FeatureNormalizer(mins=(0.0, 0.0), maxs=(10.0, 1.0)).including([30.0, 0.5])
    assert normalizador.mins == (0.0, 0.0)
    assert normalizador.maxs == (30.0, 1.0)
    assert normalizador.normalize([12.0, 0.5]).tolist() == pytest.approx([0.4, 0.5])


def test_targets_beyond_history_are_not_clipped_together():
    # Histórico com temperaturas em [0, 10]; o feriado só alarga a faixa de Y
    historico = [
        (datetime.date(2016, 6, 1), _atributos(10.0, 10.0, 0.0, 0.0)),
        (datetime.date(2016, 6, 2), _atributos(0.0, 10.0, 0.0, 0.5)),
        (datetime.date(2016, 6, 4), _atributos(5.0, 5.0, 5.0, -0.125, DayType.HOLIDAY)),
    ]
    morno = find_similar_days(_atributos(12.0, 12.0, 12.0, 0.5), historico, count=2)
    quente = find_similar_days(_atributos(30.0, 30.0, 30.0, 0.5), historico, count=2)
    assert morno.dates == (datetime.date(2016, 6, 1), datetime.date(2016, 6, 2))
    assert quente.dates == (datetime.date(2016, 6, 2), datetime.date(2016, 6, 1))
    assert morno.distances != quente.distances


def test_explicit_normalizer_is_extended_with_target():
    historico = [(datetime.date(2016, 1, 4), _features(0.0)), (datetime.date(2016, 1, 5), _features(0.4))]
    similares = find_similar_days(_features(0.8), historico, FeatureNormalizer(mins=(0.0,) * 4, maxs=(0.4,) * 4))
    # Faixa estendida para [0, 0.8]: distâncias 0.5 e 1 por atributo
    assert similares.distances == pytest.approx((1.0, 2.0))


@pytest.mark.parametrize("fator", [0.5, 0.25, 0.1])
def test_similar_days_ranking_survives_positive_rescaling(fator):
    rng = np.random.default_rng(11)
    brutos = []
    for n in range(40):
        minima = float(rng.uniform(-10, 10))
        maxima = minima + float(rng.uniform(0, 12))
        brutos.append((date_for_day_index(2016, n + 1), (float(rng.uniform(minima, maxima)), maxima, minima,
                                                          float(rng.uniform(-1, 1)))))
    alvo = (4.0, 9.0, -1.0, 0.3)

    def busca(escala):
        historico = [(data, _atributos(*(escala * v for v in valores))) for data, valores in brutos]
        return find_similar_days(_atributos(*(escala * v for v in alvo)), historico, count=10)

    original, reescalado = busca(1.0), busca(fator)
    assert reescalado.dates == original.dates
    assert reescalado.distances == pytest.approx(original.distances)


def test_source_day_undoes_offset():
    dias = _historico((0.0, 2.0, 4.0))
    cenario = build_scenario_profile(dias, MEDIUM, offset_c=1.5)
    sem_source = AnnualTemperatureScenario(scenario=cenario.scenario, offset_c=cenario.offset_c, days=cenario.days)
    for d in (1, 200):
        data, dia = cenario.day(d)
        assert cenario.source_day(d).date == data
        assert cenario.source_day(d).temps == pytest.approx(tuple(t - 1.5 for t in dia.temps))
        assert sem_source.source_day(d).temps == pytest.approx(cenario.source_day(d).temps)
