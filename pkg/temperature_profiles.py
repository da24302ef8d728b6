"""
Perfis anuais de temperatura (cenários alto, médio e baixo) e busca dos dias
históricos mais parecidos com cada dia do perfil.
"""

import datetime
import logging
import math
import os
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from dotenv import load_dotenv

from data_ingestion import (
    DAYS_PER_YEAR,
    DayType,
    HolidayCalendar,
    HourlyTemperatureDay,
    classify_day,
    day_of_year,
)

load_dotenv()

logger = logging.getLogger(__name__)

SIMILAR_DAYS_COUNT = int(os.getenv("SIMILAR_DAYS_COUNT", "5"))
EXPECTED_HISTORY_YEARS = 5

HIGH, MEDIUM, LOW, ACTUAL = "high", "medium", "low", "actual"
SCENARIOS = (HIGH, MEDIUM, LOW)


@dataclass(frozen=True)
class DayFeatures:
    """T_a, T_h, T_l (°C), Y = sin(2πD/365) e o tipo do dia."""

    t_avg: float
    t_max: float
    t_min: float
    day_of_year_feature: float
    day_type: DayType

    def __post_init__(self):
        if not (self.t_min - 1e-9 <= self.t_avg <= self.t_max + 1e-9):
            raise ValueError(f"Atributos inconsistentes: min={self.t_min} média={self.t_avg} max={self.t_max}")
        if not -1.0 <= self.day_of_year_feature <= 1.0:
            raise ValueError(f"Atributo de dia do ano {self.day_of_year_feature} fora de [-1, 1]")

    def as_vector(self) -> np.ndarray:
        return np.array([self.t_avg, self.t_max, self.t_min, self.day_of_year_feature])


@dataclass(frozen=True)
class FeatureNormalizer:
    """Mínimo e máximo de cada atributo no corpus de referência."""

    mins: Tuple[float, ...]
    maxs: Tuple[float, ...]

    def __post_init__(self):
        if len(self.mins) != len(self.maxs):
            raise ValueError("mins e maxs com tamanhos diferentes")
        if any(lo > hi for lo, hi in zip(self.mins, self.maxs)):
            raise ValueError("min > max em algum atributo")

    @classmethod
    def from_matrix(cls, matrix) -> "FeatureNormalizer":
        arr = np.atleast_2d(np.asarray(matrix, dtype=float))
        if arr.shape[0] == 0:
            raise ValueError("Corpus vazio para normalização")
        return cls(mins=tuple(float(v) for v in arr.min(axis=0)),
                   maxs=tuple(float(v) for v in arr.max(axis=0)))

    def normalize(self, values) -> np.ndarray:
        """
        (f - min) / (max - min), recortado em [0, 1].

        Atributo com max == min vira 0: não carrega informação.
        """
        arr = np.asarray(values, dtype=float)
        lo = np.asarray(self.mins)
        faixa = np.asarray(self.maxs) - lo
        degenerado = faixa <= 0
        normalizado = (arr - lo) / np.where(degenerado, 1.0, faixa)
        normalizado = np.where(degenerado, 0.0, normalizado)
        return np.clip(normalizado, 0.0, 1.0)

    def including(self, values) -> "FeatureNormalizer":
        """Mesmo normalizador com mínimo e máximo estendidos para cobrir `values`."""
        arr = np.asarray(values, dtype=float)
        return FeatureNormalizer(
            mins=tuple(float(v) for v in np.minimum(self.mins, arr)),
            maxs=tuple(float(v) for v in np.maximum(self.maxs, arr)),
        )


@dataclass(frozen=True)
class AnnualTemperatureScenario:
    """
    365 dias de perfil; cada dia é (data histórica de origem, temperaturas com offset).
    O índice D do dia é a posição + 1. `source_days` guarda os mesmos dias
    sem o offset.
    """

    scenario: str
    offset_c: float
    days: Tuple[Tuple[datetime.date, HourlyTemperatureDay], ...]
    source_days: Tuple[HourlyTemperatureDay, ...] = ()

    def __post_init__(self):
        if len(self.days) != DAYS_PER_YEAR:
            raise ValueError(f"Cenário {self.scenario} com {len(self.days)} dias, esperado {DAYS_PER_YEAR}")
        if self.source_days and len(self.source_days) != DAYS_PER_YEAR:
            raise ValueError(f"Cenário {self.scenario} com {len(self.source_days)} dias de origem")

    def day(self, d: int) -> Tuple[datetime.date, HourlyTemperatureDay]:
        return self.days[d - 1]

    def source_day(self, d: int) -> HourlyTemperatureDay:
        """Dia D como medido, sem o offset."""
        if self.source_days:
            return self.source_days[d - 1]
        dia = self.days[d - 1][1]
        return dia if self.offset_c == 0 else dia.shifted(-self.offset_c)


def compute_day_features(day: HourlyTemperatureDay, d: int, day_type: DayType) -> DayFeatures:
    """Atributos de temperatura e calendário de um dia; d é o índice 1..365."""
    if not 1 <= d <= DAYS_PER_YEAR:
        raise ValueError(f"Dia do ano {d} fora de 1..{DAYS_PER_YEAR}")
    temps = np.asarray(day.temps, dtype=float)
    return DayFeatures(
        t_avg=float(temps.mean()),
        t_max=float(temps.max()),
        t_min=float(temps.min()),
        day_of_year_feature=math.sin(2.0 * math.pi * d / DAYS_PER_YEAR),
        day_type=day_type,
    )


def fit_normalizer(features: Sequence[DayFeatures]) -> FeatureNormalizer:
    """
    Ajusta mínimo e máximo de T_a, T_h, T_l e Y.

    Raises:
        ValueError: Menos de 2 registros
    """
    if len(features) < 2:
        raise ValueError(f"São necessários ao menos 2 registros para normalizar, recebidos {len(features)}")
    normalizador = FeatureNormalizer.from_matrix([f.as_vector() for f in features])
    if all(lo == hi for lo, hi in zip(normalizador.mins, normalizador.maxs)):
        logger.warning("Todos os atributos são constantes no corpus; distâncias serão todas 0")
    return normalizador


def history_features(days: Sequence[HourlyTemperatureDay], cal: HolidayCalendar) -> List[Tuple[datetime.date, DayFeatures]]:
    """Atributos de cada dia histórico, com o D e o tipo do próprio dia."""
    return [
        (dia.date, compute_day_features(dia, day_of_year(dia.date), classify_day(dia.date, cal)))
        for dia in days
    ]


def group_by_year(days: Sequence[HourlyTemperatureDay]) -> Dict[int, Dict[int, HourlyTemperatureDay]]:
    """{ano: {D: dia}} considerando somente dias completos."""
    por_ano: Dict[int, Dict[int, HourlyTemperatureDay]] = defaultdict(dict)
    for dia in days:
        if not dia.is_complete:
            logger.warning(f"Dia {dia.date} incompleto ignorado na montagem de cenários")
            continue
        por_ano[dia.date.year][day_of_year(dia.date)] = dia
    return dict(por_ano)


def build_scenario_profile(history: Union[Sequence[HourlyTemperatureDay], Mapping[int, Mapping[int, HourlyTemperatureDay]]],
                           scenario: str, offset_c: float = 0.0) -> AnnualTemperatureScenario:
    """
    Monta o perfil anual de um cenário escolhendo, para cada D, o D-ésimo dia
    de um dos anos do histórico.

    Alto escolhe a maior média diária, baixo a menor e médio a mediana
    (mediana inferior quando o número de anos é par). O offset é somado a
    todas as horas.

    Args:
        history: Dias históricos, ou já agrupados por ano com group_by_year
        scenario: 'high', 'medium' ou 'low'
        offset_c: Margem somada a todas as horas (°C)

    Raises:
        ValueError: Cenário desconhecido ou dia do ano ausente em todos os anos
    """
    if scenario not in SCENARIOS:
        raise ValueError(f"Cenário desconhecido: {scenario}")
    por_ano = history if isinstance(history, Mapping) else group_by_year(history)
    if not por_ano:
        raise ValueError("Histórico de temperatura vazio")
    if len(por_ano) != EXPECTED_HISTORY_YEARS:
        logger.warning(f"Histórico com {len(por_ano)} anos (esperado {EXPECTED_HISTORY_YEARS}); cenários seguem assim mesmo")

    escolhidos = []
    for d in range(1, DAYS_PER_YEAR + 1):
        candidatos = [por_ano[ano][d] for ano in sorted(por_ano) if d in por_ano[ano]]
        if not candidatos:
            raise ValueError(f"Dia do ano {d} ausente em todos os anos do histórico")
        # Ordena por média diária; empate resolvido pelo ano
        candidatos.sort(key=lambda dia: (dia.daily_mean, dia.date.year))
        if scenario == HIGH:
            escolhido = candidatos[-1]
        elif scenario == LOW:
            escolhido = candidatos[0]
        else:
            escolhido = candidatos[(len(candidatos) - 1) // 2]
        escolhidos.append(escolhido)
    return AnnualTemperatureScenario(
        scenario=scenario,
        offset_c=offset_c,
        days=tuple((dia.date, dia.shifted(offset_c)) for dia in escolhidos),
        source_days=tuple(escolhidos),
    )


def build_all_scenarios(history, offset_c: float = 0.0) -> Dict[str, AnnualTemperatureScenario]:
    por_ano = history if isinstance(history, Mapping) else group_by_year(history)
    return {nome: build_scenario_profile(por_ano, nome, offset_c) for nome in SCENARIOS}


def scenario_from_year(days: Sequence[HourlyTemperatureDay], year: int, offset_c: float = 0.0) -> AnnualTemperatureScenario:
    """Perfil 'actual' com as temperaturas conhecidas de um ano (verificação retroativa)."""
    por_ano = group_by_year([dia for dia in days if dia.date.year == year])
    dias_do_ano = por_ano.get(year, {})
    faltando = [d for d in range(1, DAYS_PER_YEAR + 1) if d not in dias_do_ano]
    if faltando:
        raise ValueError(f"Ano {year} sem temperatura para {len(faltando)} dias (primeiro: D={faltando[0]})")
    return AnnualTemperatureScenario(
        scenario=ACTUAL,
        offset_c=offset_c,
        days=tuple((dias_do_ano[d].date, dias_do_ano[d].shifted(offset_c)) for d in range(1, DAYS_PER_YEAR + 1)),
        source_days=tuple(dias_do_ano[d] for d in range(1, DAYS_PER_YEAR + 1)),
    )


@dataclass(frozen=True)
class SimilarDays:
    """Datas escolhidas em ordem de distância crescente. `flagged` indica menos candidatos que o pedido."""

    dates: Tuple[datetime.date, ...]
    distances: Tuple[float, ...]
    flagged: bool = False

    def __iter__(self):
        return iter(self.dates)

    def __len__(self):
        return len(self.dates)

    def __getitem__(self, idx):
        return self.dates[idx]


def find_similar_days(target: DayFeatures, history: Sequence[Tuple[datetime.date, DayFeatures]],
                      normalizer: Optional[FeatureNormalizer] = None,
                      count: int = SIMILAR_DAYS_COUNT) -> SimilarDays:
    """
    Os `count` dias históricos do mesmo tipo com menor distância euclidiana
    aos atributos normalizados do dia alvo. Empates vão para a data mais recente.

    A normalização cobre o histórico e o próprio alvo: `normalizer` (ajustado
    no histórico, ou ajustado aqui quando omitido) é estendido com os
    atributos do alvo antes de medir as distâncias.

    Raises:
        ValueError: Nenhum candidato do mesmo tipo de dia
    """
    candidatos = [(data, f) for data, f in history if f.day_type == target.day_type]
    if not candidatos:
        raise ValueError(f"Nenhum dia histórico do tipo {target.day_type.value}")
    if normalizer is None:
        normalizer = FeatureNormalizer.from_matrix([f.as_vector() for _, f in history])
    normalizer = normalizer.including(target.as_vector())

    alvo = normalizer.normalize(target.as_vector())
    matriz = normalizer.normalize(np.array([f.as_vector() for _, f in candidatos]))
    distancias = np.linalg.norm(matriz - alvo, axis=1)
    recencia = np.array([-data.toordinal() for data, _ in candidatos])
    ordem = np.lexsort((recencia, distancias))[:count]

    flagged = len(candidatos) < count
    if flagged:
        logger.warning(f"Apenas {len(candidatos)} candidatos do tipo {target.day_type.value} (pedidos {count})")
    return SimilarDays(
        dates=tuple(candidatos[i][0] for i in ordem),
        distances=tuple(float(distancias[i]) for i in ordem),
        flagged=flagged,
    )
