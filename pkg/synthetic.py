"""
Gerador de dados sintéticos para testes e demonstrações.

Clima: senoide sazonal + senoide diária + ruído autorregressivo.
Frota: cada transformador mistura três perfis base (residencial com pico
noturno, comercial em platô diurno, industrial plano e alto) conforme a
sua composição; a magnitude diária acompanha a temperatura.
"""

import datetime
import logging
import os
from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np

from data_ingestion import (
    DayType,
    HolidayCalendar,
    HourlyTemperatureDay,
    TransformerDayObservation,
    classify_day,
    day_of_year,
    is_leap_day,
    serialize_transformer_csv,
    serialize_weather_csv,
)
from load_shape import compute_composition

logger = logging.getLogger(__name__)

DEFAULT_YEARS = (2017, 2018)
DEFAULT_TRANSFORMERS = 10

MEAN_TEMP_C = 5.0
SEASONAL_AMPLITUDE_C = 14.0
DAILY_AMPLITUDE_C = 5.0
# Dia mais frio do ano (D)
COLDEST_DAY = 20

_HORAS = np.arange(24)

# Participações (residencial, comercial, industrial) dos arquétipos de transformador
ARCHETYPES = (
    (0.80, 0.12, 0.08),
    (0.12, 0.78, 0.10),
    (0.08, 0.10, 0.82),
    (0.45, 0.40, 0.15),
)


def _gauss(centro, largura):
    return np.exp(-(((_HORAS - centro) / largura) ** 2))


def _peak_one(perfil):
    return perfil / perfil.max()


BASE_SHAPES = {
    DayType.WORKDAY: {
        "residential": _peak_one(0.30 + 0.25 * _gauss(7.5, 1.5) + 0.70 * _gauss(19.0, 2.0)),
        "commercial": _peak_one(0.35 + 0.65 / (1 + np.exp(-(_HORAS - 8) * 1.5)) / (1 + np.exp((_HORAS - 18) * 1.5))),
        "industrial": _peak_one(0.92 + 0.08 * _gauss(14.0, 4.0)),
    },
    DayType.HOLIDAY: {
        "residential": _peak_one(0.35 + 0.30 * _gauss(12.0, 3.0) + 0.70 * _gauss(19.0, 2.0)),
        "commercial": _peak_one(0.40 + 0.30 / (1 + np.exp(-(_HORAS - 10) * 1.2)) / (1 + np.exp((_HORAS - 17) * 1.2))),
        "industrial": _peak_one(0.85 + 0.05 * _gauss(14.0, 4.0)),
    },
}


@dataclass(frozen=True)
class SyntheticFixture:
    weather_csv: str
    loads_csv: str
    compositions_csv: str
    holidays_txt: str
    forecast_csv: str


def _dates(year: int) -> List[datetime.date]:
    inicio = datetime.date(year, 1, 1)
    datas = [inicio + datetime.timedelta(days=n) for n in range((datetime.date(year + 1, 1, 1) - inicio).days)]
    return [d for d in datas if not is_leap_day(d)]


def holidays_for(years: Sequence[int]) -> HolidayCalendar:
    """Feriados fixos de cada ano (além de sábados e domingos)."""
    datas = set()
    for ano in years:
        for mes, dia in ((1, 1), (7, 1), (12, 25), (12, 26)):
            datas.add(datetime.date(ano, mes, dia))
        setembro = datetime.date(ano, 9, 1)
        datas.add(setembro + datetime.timedelta(days=(7 - setembro.weekday()) % 7))
    return HolidayCalendar(dates=frozenset(datas))


def generate_weather(years: Sequence[int], rng: np.random.Generator) -> List[HourlyTemperatureDay]:
    """
    Senoide sazonal, senoide diária e anomalia diária por ano.

    O padrão horário de cada D é o mesmo em todos os anos e os anos diferem
    só no nível do dia: o ano de maior média no dia D é o mais quente em
    todas as horas.
    """
    padrao_horario = DAILY_AMPLITUDE_C * np.cos(2 * np.pi * (_HORAS - 15) / 24) + rng.normal(0.0, 0.3, (366, 24))
    dias = []
    for ano in years:
        deslocamento = rng.normal(0.0, 0.8)
        anomalia = 0.0
        for data in _dates(ano):
            d = day_of_year(data)
            sazonal = MEAN_TEMP_C - SEASONAL_AMPLITUDE_C * np.cos(2 * np.pi * (d - COLDEST_DAY) / 365)
            anomalia = 0.7 * anomalia + rng.normal(0.0, 2.5)
            temps = np.round(sazonal + deslocamento + anomalia + padrao_horario[d], 1)
            dias.append(HourlyTemperatureDay(date=data, temps=tuple(float(t) for t in np.clip(temps, -50, 50))))
    return dias


def _transformer_shares(n: int, rng: np.random.Generator) -> List[np.ndarray]:
    participacoes = []
    for idx in range(n):
        base = np.asarray(ARCHETYPES[idx % len(ARCHETYPES)])
        variado = np.clip(base + rng.normal(0.0, 0.03, 3), 0.01, None)
        participacoes.append(variado / variado.sum())
    return participacoes


def generate_fleet(weather: Sequence[HourlyTemperatureDay], cal: HolidayCalendar, n_transformers: int,
                   rng: np.random.Generator) -> List[TransformerDayObservation]:
    """
    Observações diárias da frota.

    A composição de cada dia é a participação das categorias na hora de pico
    do perfil sem ruído; por isso é constante por (transformador, tipo de dia).
    """
    participacoes = _transformer_shares(n_transformers, rng)
    picos_base = rng.uniform(20.0, 35.0, n_transformers)
    observacoes = []
    for idx, (participacao, pico_base) in enumerate(zip(participacoes, picos_base), start=1):
        tid = f"TX{idx:02d}"
        composicoes: Dict[DayType, object] = {}
        for dia in weather:
            tipo = classify_day(dia.date, cal)
            formas = BASE_SHAPES[tipo]
            categorias = {cat: participacao[pos] * formas[cat]
                          for pos, cat in enumerate(("residential", "commercial", "industrial"))}
            total = sum(categorias.values())
            if tipo not in composicoes:
                hora_pico = int(np.argmax(total))
                composicoes[tipo] = compute_composition(
                    {cat: float(v[hora_pico]) for cat, v in categorias.items()}, float(total[hora_pico])
                )
            media = float(np.mean(dia.temps))
            magnitude = 1.0 + 0.01 * max(0.0, 15.0 - media) + 0.02 * max(0.0, media - 20.0)
            cargas = total * pico_base * magnitude * (1.0 + rng.normal(0.0, 0.02, 24))
            observacoes.append(
                TransformerDayObservation(
                    transformer_id=tid,
                    date=dia.date,
                    loads=tuple(float(v) for v in np.round(np.clip(cargas, 0.01, None), 3)),
                    composition=composicoes[tipo],
                )
            )
    return observacoes


def generate_fixture(n_transformers: int = DEFAULT_TRANSFORMERS, years: Sequence[int] = DEFAULT_YEARS,
                     seed: int = 42) -> SyntheticFixture:
    """
    Gera os textos de clima, cargas, composições, feriados e uma previsão de
    composição sazonal (verão mais residencial, inverno equilibrado).

    Args:
        n_transformers: Tamanho da frota
        years: Anos a gerar
        seed: Semente; a mesma semente gera os mesmos textos

    Returns:
        SyntheticFixture
    """
    if n_transformers < 1:
        raise ValueError(f"n_transformers deve ser >= 1, recebeu {n_transformers}")
    if not years:
        raise ValueError("Informe ao menos um ano")
    rng = np.random.default_rng(seed)
    calendario = holidays_for(years)
    clima = generate_weather(years, rng)
    frota = generate_fleet(clima, calendario, n_transformers, rng)
    cargas_csv, composicoes_csv = serialize_transformer_csv(frota)
    logger.info(f"Dados sintéticos: {n_transformers} transformadores, anos {list(years)}, {len(clima)} dias")
    return SyntheticFixture(
        weather_csv=serialize_weather_csv(clima),
        loads_csv=cargas_csv,
        compositions_csv=composicoes_csv,
        holidays_txt="".join(f"{d.isoformat()}\n" for d in sorted(calendario.dates)),
        forecast_csv="date_range,r_frac,c_frac,i_frac\n05-01:09-30,0.6,0.3,0.1\n10-01:04-30,0.4,0.4,0.2\n",
    )


def write_fixture(fixture: SyntheticFixture, out_dir: str, seed: int = 42, backtest_year: int = None) -> Dict[str, str]:
    """
    Grava os arquivos do conjunto sintético e um run.env que aponta para eles.

    Returns:
        {nome lógico: caminho}
    """
    os.makedirs(out_dir, exist_ok=True)
    arquivos = {
        "WEATHER_CSV": ("weather.csv", fixture.weather_csv),
        "LOADS_CSV": ("loads.csv", fixture.loads_csv),
        "COMPOSITIONS_CSV": ("compositions.csv", fixture.compositions_csv),
        "HOLIDAYS_FILE": ("holidays.txt", fixture.holidays_txt),
        "FORECAST_CSV": ("forecast.csv", fixture.forecast_csv),
    }
    caminhos = {}
    for chave, (nome, texto) in arquivos.items():
        caminho = os.path.join(out_dir, nome)
        with open(caminho, "w", encoding="utf-8") as f:
            f.write(texto)
        caminhos[chave] = caminho

    linhas = [f"{chave}={os.path.basename(caminho)}" for chave, caminho in caminhos.items()]
    linhas += ["THERMAL_PRESET=onaf-50mva", f"SEED={seed}", "OUT_DIR=results"]
    if backtest_year is not None:
        linhas.append(f"BACKTEST_YEAR={backtest_year}")
    caminho_config = os.path.join(out_dir, "run.env")
    with open(caminho_config, "w", encoding="utf-8") as f:
        f.write("\n".join(linhas) + "\n")
    caminhos["CONFIG"] = caminho_config
    return caminhos
