import io

import pytest

from data_ingestion import fill_gaps, parse_holidays, parse_transformer_csv, parse_weather_csv
from load_shape import LoadComposition
from rating_engine import FleetHistory, annual_rating_profiles
from synthetic import generate_fixture
from temperature_profiles import build_all_scenarios
from thermal_model import PRESETS

FIXTURE_SEED = 7
RUN_SEED = 42
# Frota pequena para manter a suíte rápida
FIXTURE_TRANSFORMERS = 4
FIXTURE_YEARS = (2017, 2018)
PIPELINE = {"k_max": 4, "n_init": 2}
FORECAST = LoadComposition.from_fractions(0.5, 0.3, 0.2)


@pytest.fixture(scope="session")
def preset():
    return PRESETS["onaf-50mva"]


@pytest.fixture(scope="session")
def fixture_texts():
    return generate_fixture(FIXTURE_TRANSFORMERS, FIXTURE_YEARS, FIXTURE_SEED)


@pytest.fixture(scope="session")
def fleet_data(fixture_texts):
    """(clima preenchido, observações, calendário) lidos dos textos sintéticos."""
    clima = fill_gaps(parse_weather_csv(io.StringIO(fixture_texts.weather_csv)))
    frota = parse_transformer_csv(io.StringIO(fixture_texts.loads_csv), io.StringIO(fixture_texts.compositions_csv))
    calendario = parse_holidays(io.StringIO(fixture_texts.holidays_txt))
    return clima, frota, calendario


@pytest.fixture(scope="session")
def history(fleet_data):
    clima, frota, calendario = fleet_data
    return FleetHistory(clima, frota, calendario)


@pytest.fixture(scope="session")
def scenarios(fleet_data):
    return build_all_scenarios(fleet_data[0])


@pytest.fixture(scope="session")
def profiles(scenarios, history, preset):
    """Os três perfis anuais para uma composição equilibrada, com dias semelhantes do cenário médio."""
    return annual_rating_profiles(FORECAST, scenarios, history, preset, RUN_SEED, shape_cache={}, **PIPELINE)
