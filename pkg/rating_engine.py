"""
Capacidade dinâmica diária (F_EQA = 1), perfis anuais por cenário de
temperatura e métricas de verificação ME, AE e VE.

Fluxo de cada dia D do perfil:
    1. dias históricos semelhantes ao dia D do cenário
    2. composições dos transformadores nesses dias -> GMM com K pela silhueta
    3. pertinência da composição prevista -> perfil normalizado de 24 h
    4. escala do perfil até o envelhecimento equivalente do dia valer 1
"""

import datetime
import functools
import logging
import os
from collections import defaultdict
from dataclasses import dataclass, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from dotenv import load_dotenv
from scipy import optimize

from data_ingestion import (
    DAYS_PER_YEAR,
    HolidayCalendar,
    HourlyTemperatureDay,
    TransformerDayObservation,
    classify_day,
    date_for_day_index,
    day_of_year,
)
from gmm_clustering import (
    GMM_K_MAX,
    GMM_N_INIT,
    GmmModel,
    default_k_range,
    fit_gmm,
    membership,
    membership_matrix,
    normalize_compositions,
    select_k,
)
from load_shape import LoadComposition, centroid_profiles, construct_load_shape, normalize_profile
from scheduler import PARALLELISM, map_days
from temperature_profiles import (
    ACTUAL,
    MEDIUM,
    SCENARIOS,
    SIMILAR_DAYS_COUNT,
    AnnualTemperatureScenario,
    SimilarDays,
    build_all_scenarios,
    compute_day_features,
    find_similar_days,
    fit_normalizer,
    history_features,
    scenario_from_year,
)
from thermal_model import ThermalParameters, simulate_day

load_dotenv()

logger = logging.getLogger(__name__)

RATING_TOLERANCE = float(os.getenv("RATING_TOLERANCE", "1e-3"))
RATING_MAX_SCALE = float(os.getenv("RATING_MAX_SCALE", "16"))
RATING_MAX_FAILURE_FRACTION = float(os.getenv("RATING_MAX_FAILURE_FRACTION", "0.05"))
TEST_SET_FRACTION = float(os.getenv("TEST_SET_FRACTION", "0.25"))
# Ajustes de GMM mantidos em memória por processo
CLUSTER_CACHE_SIZE = int(os.getenv("CLUSTER_CACHE_SIZE", "256"))
# Folga relativa na comparação de capacidades entre cenários
ORDERING_RTOL = 1e-9

# Passo da busca incremental (p.u. do pico)
STEP_PU = 0.001

BISECTION, STEPPING = "bisection", "stepping"
SOLVERS = (BISECTION, STEPPING)

SUMMER, WINTER = "summer", "winter"
SUMMER_MONTHS = range(5, 10)
# Ano sem 29/02 usado para converter o índice D em mês
_REFERENCE_YEAR = 2001

DEFAULT_LOAD_TYPES = {
    "residential-heavy": LoadComposition.from_fractions(0.8, 0.1, 0.1),
    "commercial-heavy": LoadComposition.from_fractions(0.1, 0.8, 0.1),
    "industrial-heavy": LoadComposition.from_fractions(0.1, 0.1, 0.8),
    "balanced": LoadComposition.from_fractions(1 / 3, 1 / 3, 1 / 3),
}


class RatingError(RuntimeError):
    pass


@dataclass(frozen=True)
class DailyRating:
    """
    Capacidade de um dia do perfil e sua procedência.

    Attributes:
        day_index: D (1..365)
        date_source: Data histórica de onde vieram as temperaturas do dia
        rating_mva: Capacidade dinâmica (MVA) = peak_pu * potência nominal
        peak_pu: Pico do perfil escalado (p.u.)
        f_eqa_at_solution: F_EQA na escala encontrada
        scale: Fator aplicado ao perfil normalizado
        similar_dates: Dias históricos semelhantes usados no agrupamento
        k_star: Número de clusters escolhido
        q_avg: Silhueta média do agrupamento (None com K = 1)
        memberships: Pertinências da composição prevista
        top_membership: Maior pertinência
    """

    day_index: int
    date_source: Optional[datetime.date]
    rating_mva: float
    peak_pu: float
    f_eqa_at_solution: float
    scale: float
    similar_dates: Tuple[datetime.date, ...] = ()
    k_star: Optional[int] = None
    q_avg: Optional[float] = None
    memberships: Tuple[float, ...] = ()
    top_membership: Optional[float] = None

    def __post_init__(self):
        if not 1 <= self.day_index <= DAYS_PER_YEAR:
            raise ValueError(f"day_index {self.day_index} fora de 1..{DAYS_PER_YEAR}")
        if self.rating_mva < 0 or self.peak_pu < 0:
            raise ValueError(f"Capacidade negativa no dia {self.day_index}")


@dataclass(frozen=True)
class DayFailure:
    day_index: int
    reason: str


@dataclass(frozen=True)
class AnnualRatingProfile:
    """365 posições em ordem de D; dias que falharam ficam None e aparecem em `failures`."""

    scenario: str
    ratings: Tuple[Optional[DailyRating], ...]
    failures: Tuple[DayFailure, ...] = ()

    def __post_init__(self):
        if len(self.ratings) != DAYS_PER_YEAR:
            raise ValueError(f"Perfil com {len(self.ratings)} dias, esperado {DAYS_PER_YEAR}")
        for pos, rating in enumerate(self.ratings, start=1):
            if rating is not None and rating.day_index != pos:
                raise ValueError(f"Posição {pos} contém o dia {rating.day_index}")

    def rated(self) -> List[DailyRating]:
        return [r for r in self.ratings if r is not None]

    def rating_array(self) -> np.ndarray:
        """Capacidades em MVA; NaN nos dias sem capacidade."""
        return np.array([np.nan if r is None else r.rating_mva for r in self.ratings])


@dataclass(frozen=True)
class BacktestReport:
    period: str
    me_pct: float
    ae_pct: float
    ve_pct: float
    days: int = 0
    transformer_id: Optional[str] = None
    scenario: str = ACTUAL

    def __post_init__(self):
        if self.period not in (SUMMER, WINTER):
            raise ValueError(f"Período desconhecido: {self.period}")
        if min(self.me_pct, self.ae_pct, self.ve_pct) < 0:
            raise ValueError("Métricas de erro não podem ser negativas")


@dataclass(frozen=True)
class FleetBacktest:
    test_set: Tuple[str, ...]
    reports: Dict[str, Tuple[BacktestReport, BacktestReport]]
    average: Tuple[BacktestReport, BacktestReport]
    failures: Dict[str, str]
    scenario: str = ACTUAL


@dataclass(frozen=True)
class SeasonalSummary:
    scenario: str
    winter_avg: float
    winter_min: float
    summer_avg: float
    summer_min: float
    average_membership: float
    rated_days: int


@dataclass(frozen=True)
class ShapeSynthesis:
    shape: Tuple[float, ...]
    k_star: int
    q_avg: Optional[float]
    memberships: Tuple[float, ...]
    top_membership: float
    model: Optional[GmmModel] = None


@dataclass(frozen=True)
class ShapePlan:
    """
    Dias semelhantes e perfil sintetizado de cada D, calculados uma vez a partir
    do cenário de referência e usados por todos os cenários; de um cenário
    para outro muda só a temperatura ambiente.
    """

    reference: str
    similar: Dict[int, SimilarDays]
    shapes: Dict[int, ShapeSynthesis]
    failures: Dict[int, str]


class FleetHistory:
    """
    Histórico de clima e das observações diárias da frota.

    Somente dias de clima completos e com ao menos uma observação de
    transformador entram como candidatos a dia semelhante.
    """

    def __init__(self, weather: Sequence[HourlyTemperatureDay], observations: Sequence[TransformerDayObservation],
                 calendar: HolidayCalendar = HolidayCalendar()):
        if not observations:
            raise ValueError("Histórico da frota vazio")
        self.weather = tuple(d for d in weather if d.is_complete)
        self.observations = tuple(observations)
        self.calendar = calendar

        por_data = defaultdict(list)
        for obs in self.observations:
            por_data[obs.date].append(obs)
        self._by_date = dict(por_data)

        com_carga = [d for d in self.weather if d.date in self._by_date]
        descartados = len(self.weather) - len(com_carga)
        if descartados:
            logger.debug(f"{descartados} dias de clima sem observação de carga fora da busca de semelhantes")
        self.features = history_features(com_carga, calendar)
        self.normalizer = fit_normalizer([f for _, f in self.features])

    def observations_on(self, dates: Sequence[datetime.date]) -> List[TransformerDayObservation]:
        return [obs for data in dates for obs in self._by_date.get(data, [])]

    @property
    def transformer_ids(self) -> Tuple[str, ...]:
        return tuple(sorted({obs.transformer_id for obs in self.observations}))


def season_of(day: Union[int, datetime.date]) -> str:
    """Verão = maio a setembro, inverno = outubro a abril. Aceita data ou D."""
    mes = day.month if isinstance(day, datetime.date) else date_for_day_index(_REFERENCE_YEAR, day).month
    return SUMMER if mes in SUMMER_MONTHS else WINTER


def _f_eqa(scale: float, shape: np.ndarray, ambient, p: ThermalParameters) -> float:
    return simulate_day(scale * shape, ambient, p).f_eqa


def _check_shape(shape, tol) -> np.ndarray:
    arr = np.asarray(shape, dtype=float)
    if arr.max() <= 0:
        raise ValueError("Perfil sem carga positiva")
    if tol <= 0:
        raise ValueError(f"Tolerância deve ser positiva, recebeu {tol}")
    return arr


def _rating_from(scale, shape, ambient, p, day_index, date_source) -> DailyRating:
    resultado = simulate_day(scale * shape, ambient, p)
    peak_pu = float(scale * shape.max())
    return DailyRating(
        day_index=day_index,
        date_source=date_source,
        rating_mva=peak_pu * p.rated_mva,
        peak_pu=peak_pu,
        f_eqa_at_solution=resultado.f_eqa,
        scale=float(scale),
    )


def daily_rating(shape: Sequence[float], ambient: Sequence[float], p: ThermalParameters,
                 tol: float = RATING_TOLERANCE, day_index: int = 1, date_source: Optional[datetime.date] = None,
                 max_scale: float = RATING_MAX_SCALE) -> DailyRating:
    """
    Escala s tal que F_EQA(s * perfil) = 1, por bisseção.

    O limite superior começa em 1 e dobra até F_EQA passar de 1; o inferior
    é o último limite testado abaixo de 1 (ou 0).

    Args:
        shape: Perfil normalizado de 24 h
        ambient: 24 temperaturas ambiente (°C)
        p: Parâmetros térmicos
        tol: Desvio máximo aceito de F_EQA em relação a 1

    Returns:
        DailyRating com peak_pu = s * max(perfil)

    Raises:
        RatingError: Ambiente quente demais (F_EQA >= 1 sem carga) ou frio demais
            (F_EQA <= 1 mesmo em max_scale)
        ThermalConvergenceError: Propagado da simulação térmica
    """
    perfil = _check_shape(shape, tol)

    def residuo(s):
        return _f_eqa(s, perfil, ambient, p) - 1.0

    sem_carga = residuo(0.0)
    if sem_carga >= 0:
        raise RatingError(f"Dia {day_index}: F_EQA sem carga já vale {sem_carga + 1:.4f}")
    lo, hi = 0.0, 1.0
    while residuo(hi) <= 0:
        lo, hi = hi, hi * 2.0
        if hi > max_scale:
            raise RatingError(f"Dia {day_index}: F_EQA <= 1 mesmo com escala {max_scale:g}")

    escala = optimize.bisect(residuo, lo, hi, xtol=1e-12, maxiter=200)
    rating = _rating_from(escala, perfil, ambient, p, day_index, date_source)
    if abs(rating.f_eqa_at_solution - 1.0) > tol:
        raise RatingError(
            f"Dia {day_index}: bisseção terminou com F_EQA = {rating.f_eqa_at_solution:.6f} (tolerância {tol})"
        )
    return rating


def stepping_rating(shape: Sequence[float], ambient: Sequence[float], p: ThermalParameters,
                    step: float = STEP_PU, day_index: int = 1, date_source: Optional[datetime.date] = None,
                    max_scale: float = RATING_MAX_SCALE) -> DailyRating:
    """
    Busca incremental: sobe o pico em passos de `step` p.u. até F_EQA atingir 1.

    Devolve o primeiro nível com F_EQA >= 1. A varredura é feita com passos de
    100, 10 e 1 vezes `step`, cada uma partindo do último nível abaixo de 1 da
    anterior; como F_EQA cresce com a carga, o nível é o mesmo da varredura
    fina desde zero.
    """
    perfil = _check_shape(shape, step)
    pico = float(perfil.max())

    if _f_eqa(0.0, perfil, ambient, p) >= 1.0:
        raise RatingError(f"Dia {day_index}: F_EQA sem carga já é >= 1")
    passos = 0
    for multiplo in (100, 10, 1):
        while True:
            escala = (passos + multiplo) * step / pico
            if escala > max_scale:
                raise RatingError(f"Dia {day_index}: F_EQA < 1 mesmo com escala {max_scale:g}")
            if _f_eqa(escala, perfil, ambient, p) >= 1.0:
                break
            passos += multiplo
    return _rating_from((passos + 1) * step / pico, perfil, ambient, p, day_index, date_source)


def solve_rating(shape, ambient, p: ThermalParameters, tol: float = RATING_TOLERANCE, solver: str = BISECTION,
                 day_index: int = 1, date_source=None, max_scale: float = RATING_MAX_SCALE) -> DailyRating:
    if solver == BISECTION:
        return daily_rating(shape, ambient, p, tol, day_index, date_source, max_scale)
    if solver == STEPPING:
        return stepping_rating(shape, ambient, p, STEP_PU, day_index, date_source, max_scale)
    raise ValueError(f"Método desconhecido: {solver}. Opções: {SOLVERS}")


@functools.lru_cache(maxsize=CLUSTER_CACHE_SIZE)
def _fit_clusters_cached(data: bytes, shape: Tuple[int, int], seed: int, k_min: int, k_max: int,
                         n_init: int) -> Tuple[int, GmmModel]:
    matrix = np.frombuffer(data, dtype=float).reshape(shape).copy()
    faixa = default_k_range(len(matrix), len(np.unique(matrix, axis=0)), k_max)
    if faixa is None or faixa[1] < k_min:
        return 1, fit_gmm(matrix, 1, seed, n_init=n_init)
    return select_k(matrix, k_min, faixa[1], seed, n_init=n_init)


def _fit_clusters(matrix: np.ndarray, seed: int, k_min: int, k_max: int, n_init: int) -> Tuple[int, GmmModel]:
    """Seleção de K e ajuste, reaproveitando ajustes recentes do mesmo conjunto de pontos."""
    matriz = np.ascontiguousarray(matrix, dtype=float)
    return _fit_clusters_cached(matriz.tobytes(), matriz.shape, seed, k_min, k_max, n_init)


def synthesize_shape(observations: Sequence[TransformerDayObservation], target: LoadComposition, seed: int,
                     k_min: int = 2, k_max: int = GMM_K_MAX, n_init: int = GMM_N_INIT) -> ShapeSynthesis:
    """
    Perfil normalizado previsto para a composição `target` a partir das
    observações dos dias semelhantes.

    O ponto previsto não entra no ajuste do GMM; só é avaliado pelas
    pertinências. Com menos de 2 pontos distintos usa K = 1.
    """
    if not observations:
        raise ValueError("Nenhuma observação de transformador nos dias semelhantes")
    pontos, alvo = normalize_compositions(
        [obs.composition.as_rc() for obs in observations],
        target.as_rc(),
        [(obs.transformer_id, obs.date) for obs in observations],
    )
    matriz = np.array([pt.as_array() for pt in pontos])
    k_star, modelo = _fit_clusters(matriz, seed, k_min, k_max, n_init)

    responsabilidades = membership_matrix(modelo, matriz)
    centroides = centroid_profiles([(obs.loads, linha) for obs, linha in zip(observations, responsabilidades)], k_star)
    pertinencia = membership(modelo, alvo)
    return ShapeSynthesis(
        shape=construct_load_shape(pertinencia, centroides),
        k_star=k_star,
        q_avg=modelo.silhouette,
        memberships=pertinencia.probabilities,
        top_membership=pertinencia.top,
        model=modelo,
    )


@dataclass(frozen=True)
class _ShapeJob:
    observations: Tuple[TransformerDayObservation, ...]
    target: LoadComposition
    seed: int
    k_min: int
    k_max: int
    n_init: int


@dataclass(frozen=True)
class _RatingJob:
    day_index: int
    source_date: Optional[datetime.date]
    shape: Tuple[float, ...]
    ambient: Tuple[float, ...]
    params: ThermalParameters
    tol: float
    solver: str
    max_scale: float


def _describe(e: Exception) -> str:
    return f"{type(e).__name__}: {e}"


def _run_shape_job(job: _ShapeJob):
    try:
        return synthesize_shape(job.observations, job.target, job.seed, job.k_min, job.k_max, job.n_init)
    except Exception as e:
        logger.debug(f"Falha ao sintetizar perfil: {e}", exc_info=True)
        return _describe(e)


def _run_rating_job(job: _RatingJob):
    try:
        return solve_rating(job.shape, job.ambient, job.params, job.tol, job.solver,
                            job.day_index, job.source_date, job.max_scale)
    except Exception as e:
        logger.debug(f"Falha na capacidade do dia {job.day_index}: {e}", exc_info=True)
        return _describe(e)


def similar_days_for(d: int, scenario: AnnualTemperatureScenario, history: FleetHistory,
                     count: int = SIMILAR_DAYS_COUNT, target_year: Optional[int] = None) -> SimilarDays:
    """Dias históricos semelhantes ao dia D do cenário, medidos sem o offset."""
    data_origem, _ = scenario.day(d)
    data_tipo = date_for_day_index(target_year, d) if target_year else data_origem
    alvo = compute_day_features(scenario.source_day(d), d, classify_day(data_tipo, history.calendar))
    return find_similar_days(alvo, history.features, history.normalizer, count)


def _with_provenance(rating: DailyRating, similares: SimilarDays, sintese: ShapeSynthesis) -> DailyRating:
    return replace(
        rating,
        similar_dates=similares.dates,
        k_star=sintese.k_star,
        q_avg=sintese.q_avg,
        memberships=sintese.memberships,
        top_membership=sintese.top_membership,
    )


def rate_day(d: int, composition: LoadComposition, scenario: AnnualTemperatureScenario, history: FleetHistory,
             p: ThermalParameters, seed: int, tol: float = RATING_TOLERANCE, k_min: int = 2,
             k_max: int = GMM_K_MAX, n_init: int = GMM_N_INIT, count: int = SIMILAR_DAYS_COUNT,
             solver: str = BISECTION, target_year: Optional[int] = None,
             max_scale: float = RATING_MAX_SCALE,
             reference: Optional[AnnualTemperatureScenario] = None) -> Tuple[DailyRating, ShapeSynthesis]:
    """
    Executa o fluxo completo para um único dia do perfil.

    Os dias semelhantes vêm de `reference` (o próprio cenário quando omitido);
    a temperatura ambiente vem de `scenario`.

    Returns:
        (capacidade com procedência, perfil sintetizado e modelo GMM)
    """
    similares = similar_days_for(d, reference or scenario, history, count, target_year)
    sintese = synthesize_shape(history.observations_on(similares.dates), composition, seed, k_min, k_max, n_init)
    data_origem, dia = scenario.day(d)
    rating = solve_rating(sintese.shape, dia.temps, p, tol, solver, d, data_origem, max_scale)
    return _with_provenance(rating, similares, sintese), sintese


def _expand_forecast(composition_forecast) -> Tuple[LoadComposition, ...]:
    if isinstance(composition_forecast, LoadComposition):
        return (composition_forecast,) * DAYS_PER_YEAR
    previsao = tuple(composition_forecast)
    if len(previsao) != DAYS_PER_YEAR:
        raise ValueError(f"Previsão com {len(previsao)} composições, esperado 1 ou {DAYS_PER_YEAR}")
    return previsao


def plan_shapes(composition_forecast, reference: AnnualTemperatureScenario, history: FleetHistory, seed: int,
                k_min: int = 2, k_max: int = GMM_K_MAX, n_init: int = GMM_N_INIT, count: int = SIMILAR_DAYS_COUNT,
                parallelism: int = PARALLELISM, target_year: Optional[int] = None,
                shape_cache: Optional[dict] = None) -> ShapePlan:
    """
    Dias semelhantes e perfil sintetizado dos 365 dias a partir do cenário de
    referência.

    Args:
        composition_forecast: Uma LoadComposition para o ano todo ou 365 (uma por D)
        reference: Cenário cujos dias (sem offset) guiam a busca de semelhantes
        shape_cache: Dicionário compartilhado entre chamadas; perfis de dias
            com os mesmos semelhantes e a mesma composição são reaproveitados

    Returns:
        ShapePlan com as falhas de cada D registradas
    """
    previsao = _expand_forecast(composition_forecast)
    falhas: Dict[int, str] = {}

    semelhantes: Dict[int, SimilarDays] = {}
    for d in range(1, DAYS_PER_YEAR + 1):
        try:
            semelhantes[d] = similar_days_for(d, reference, history, count, target_year)
        except ValueError as e:
            falhas[d] = _describe(e)

    cache = {} if shape_cache is None else shape_cache
    chaves = {}
    pendentes: Dict[tuple, _ShapeJob] = {}
    for d, similares in semelhantes.items():
        chave = (similares.dates, previsao[d - 1].as_rc(), seed, k_min, k_max, n_init)
        chaves[d] = chave
        if chave not in cache and chave not in pendentes:
            pendentes[chave] = _ShapeJob(
                observations=tuple(history.observations_on(similares.dates)),
                target=previsao[d - 1],
                seed=seed,
                k_min=k_min,
                k_max=k_max,
                n_init=n_init,
            )
    logger.info(f"Referência {reference.scenario}: {len(pendentes)} perfis novos, "
                f"{len(chaves) - len(pendentes)} dias reaproveitando perfis já calculados")
    cache.update(zip(pendentes.keys(), map_days(_run_shape_job, list(pendentes.values()), parallelism)))

    perfis: Dict[int, ShapeSynthesis] = {}
    for d in sorted(chaves):
        sintese = cache[chaves[d]]
        if isinstance(sintese, str):
            falhas[d] = sintese
        else:
            perfis[d] = sintese
    return ShapePlan(reference=reference.scenario, similar=semelhantes, shapes=perfis, failures=falhas)


def annual_rating_profile(composition_forecast, scenario: AnnualTemperatureScenario, history: FleetHistory,
                          p: ThermalParameters, seed: int, tol: float = RATING_TOLERANCE, k_min: int = 2,
                          k_max: int = GMM_K_MAX, n_init: int = GMM_N_INIT, count: int = SIMILAR_DAYS_COUNT,
                          solver: str = BISECTION, parallelism: int = PARALLELISM, target_year: Optional[int] = None,
                          shape_cache: Optional[dict] = None,
                          max_failure_fraction: float = RATING_MAX_FAILURE_FRACTION,
                          max_scale: float = RATING_MAX_SCALE,
                          reference: Optional[AnnualTemperatureScenario] = None,
                          plan: Optional[ShapePlan] = None) -> AnnualRatingProfile:
    """
    Capacidade dinâmica dos 365 dias de um cenário.

    Args:
        composition_forecast: Uma LoadComposition para o ano todo ou 365 (uma por D)
        scenario: Perfil anual de temperatura que fornece o ambiente de cada dia
        history: Histórico da frota
        p: Parâmetros térmicos
        seed: Semente do GMM
        target_year: Ano usado para classificar o tipo de cada dia do perfil;
            sem ele vale o tipo da data histórica de origem
        shape_cache: Repassado para plan_shapes
        reference: Cenário que guia a busca de semelhantes; sem ele, o próprio `scenario`
        plan: Perfis já sintetizados (plan_shapes); quando informado, a
            previsão de composição e a referência já estão nele

    Returns:
        AnnualRatingProfile com falhas por dia registradas

    Raises:
        RatingError: Mais de max_failure_fraction dos dias sem capacidade
    """
    if plan is None:
        plan = plan_shapes(composition_forecast, reference or scenario, history, seed, k_min, k_max, n_init, count,
                           parallelism, target_year, shape_cache)
    falhas: Dict[int, str] = dict(plan.failures)

    tarefas = []
    for d in sorted(plan.shapes):
        data_origem, dia = scenario.day(d)
        tarefas.append(_RatingJob(d, data_origem, plan.shapes[d].shape, dia.temps, p, tol, solver, max_scale))

    ratings: List[Optional[DailyRating]] = [None] * DAYS_PER_YEAR
    for tarefa, resultado in zip(tarefas, map_days(_run_rating_job, tarefas, parallelism)):
        if isinstance(resultado, str):
            falhas[tarefa.day_index] = resultado
            continue
        ratings[tarefa.day_index - 1] = _with_provenance(
            resultado, plan.similar[tarefa.day_index], plan.shapes[tarefa.day_index]
        )

    failures = tuple(DayFailure(d, falhas[d]) for d in sorted(falhas))
    for falha in failures:
        logger.error(f"Cenário {scenario.scenario}, dia {falha.day_index} sem capacidade: {falha.reason}")
    if len(failures) > max_failure_fraction * DAYS_PER_YEAR:
        raise RatingError(
            f"Cenário {scenario.scenario}: {len(failures)} dias sem capacidade "
            f"(limite {max_failure_fraction:.0%} de {DAYS_PER_YEAR})"
        )
    return AnnualRatingProfile(scenario=scenario.scenario, ratings=tuple(ratings), failures=failures)


def check_scenario_ordering(profiles: Mapping[str, AnnualRatingProfile],
                            scenarios: Mapping[str, AnnualTemperatureScenario]) -> int:
    """
    Confere capacidade(alto) <= capacidade(médio) <= capacidade(baixo) dia a dia.

    Só entram na comparação os dias em que o cenário mais quente é, hora a
    hora, pelo menos tão quente quanto o mais frio e os dois têm capacidade.

    Returns:
        Número de pares (dia, cenários vizinhos) comparados

    Raises:
        RatingError: Algum dia comparado fora de ordem
    """
    ordem = [nome for nome in SCENARIOS if nome in profiles]
    comparados = 0
    sem_dominancia = 0
    violacoes = []
    for quente, frio in zip(ordem, ordem[1:]):
        for d in range(1, DAYS_PER_YEAR + 1):
            a, b = profiles[quente].ratings[d - 1], profiles[frio].ratings[d - 1]
            if a is None or b is None:
                continue
            if np.any(np.asarray(scenarios[quente].day(d)[1].temps) < np.asarray(scenarios[frio].day(d)[1].temps)):
                sem_dominancia += 1
                continue
            comparados += 1
            if a.rating_mva > b.rating_mva * (1.0 + ORDERING_RTOL):
                violacoes.append(f"D={d} {quente} {a.rating_mva:.4f} > {frio} {b.rating_mva:.4f}")
    if sem_dominancia:
        logger.info(f"{sem_dominancia} pares de dias sem dominância horária ficaram fora da conferência de ordem")
    if violacoes:
        raise RatingError(f"{len(violacoes)} dias com cenário mais quente acima do mais frio: {'; '.join(violacoes[:5])}")
    return comparados


def annual_rating_profiles(composition_forecast, scenarios: Mapping[str, AnnualTemperatureScenario],
                           history: FleetHistory, p: ThermalParameters, seed: int,
                           reference: Optional[AnnualTemperatureScenario] = None, k_min: int = 2,
                           k_max: int = GMM_K_MAX, n_init: int = GMM_N_INIT, count: int = SIMILAR_DAYS_COUNT,
                           parallelism: int = PARALLELISM, target_year: Optional[int] = None,
                           shape_cache: Optional[dict] = None, **rating) -> Dict[str, AnnualRatingProfile]:
    """
    Perfis anuais de vários cenários com os mesmos dias semelhantes e perfis
    de carga, seguidos da conferência de ordem entre cenários.

    Args:
        reference: Cenário que guia a busca de semelhantes; padrão é o médio
        **rating: tol, solver, max_scale, max_failure_fraction

    Raises:
        ValueError: Sem referência e sem cenário médio em `scenarios`
        RatingError: Falhas acima do limite ou cenários fora de ordem
    """
    if reference is None:
        if MEDIUM not in scenarios:
            raise ValueError("Informe o cenário de referência ou inclua o cenário médio")
        reference = scenarios[MEDIUM]
    plano = plan_shapes(composition_forecast, reference, history, seed, k_min, k_max, n_init, count,
                        parallelism, target_year, shape_cache)
    perfis = {
        nome: annual_rating_profile(composition_forecast, cenario, history, p, seed, parallelism=parallelism,
                                    plan=plano, **rating)
        for nome, cenario in scenarios.items()
    }
    check_scenario_ordering(perfis, scenarios)
    return perfis


def _pair(actual, estimated) -> Tuple[np.ndarray, np.ndarray]:
    a = np.asarray(actual, dtype=float)
    e = np.asarray(estimated, dtype=float)
    if a.shape != e.shape:
        raise ValueError(f"Sequências com tamanhos diferentes: {a.shape} e {e.shape}")
    if a.size == 0:
        raise ValueError("Sequências vazias")
    if np.any(a <= 0):
        raise ValueError("Capacidade real deve ser positiva em todos os dias")
    return a, e


def metric_me(actual, estimated) -> float:
    """Erro percentual absoluto médio."""
    a, e = _pair(actual, estimated)
    return float(np.mean(np.abs(a - e) / a) * 100.0)


def metric_ae(actual, estimated) -> float:
    """Erro percentual da capacidade média."""
    a, e = _pair(actual, estimated)
    return float(abs(a.mean() - e.mean()) / a.mean() * 100.0)


def metric_ve(actual, estimated) -> float:
    """Erro percentual da capacidade de vale (mínima)."""
    a, e = _pair(actual, estimated)
    return float(abs(a.min() - e.min()) / a.min() * 100.0)


def _season_report(period, actual, estimated, transformer_id=None, scenario=ACTUAL) -> BacktestReport:
    if not actual:
        raise RatingError(f"Nenhum dia avaliado no período {period}")
    return BacktestReport(
        period=period,
        me_pct=metric_me(actual, estimated),
        ae_pct=metric_ae(actual, estimated),
        ve_pct=metric_ve(actual, estimated),
        days=len(actual),
        transformer_id=transformer_id,
        scenario=scenario,
    )


def backtest(actual_loads: Sequence[TransformerDayObservation], estimated: AnnualRatingProfile,
             p: ThermalParameters, ambient: AnnualTemperatureScenario, tol: float = RATING_TOLERANCE,
             solver: str = BISECTION, parallelism: int = PARALLELISM,
             max_scale: float = RATING_MAX_SCALE) -> Tuple[BacktestReport, BacktestReport]:
    """
    Compara a capacidade estimada com a capacidade real de um transformador.

    A capacidade real de cada dia escala o perfil normalizado medido no dia
    com a temperatura real do dia (`ambient`, normalmente o cenário 'actual').
    Dias sem observação ou sem estimativa ficam fora da comparação.

    Returns:
        (relatório de inverno, relatório de verão)
    """
    ids = {obs.transformer_id for obs in actual_loads}
    if len(ids) != 1:
        raise ValueError(f"Verificação exige um único transformador, recebidos {sorted(ids)}")
    transformer_id = ids.pop()
    por_dia = {day_of_year(obs.date): obs for obs in actual_loads}

    tarefas = []
    for d in range(1, DAYS_PER_YEAR + 1):
        if d not in por_dia or estimated.ratings[d - 1] is None:
            continue
        obs = por_dia[d]
        tarefas.append(_RatingJob(d, obs.date, normalize_profile(obs.loads).values,
                                  ambient.day(d)[1].temps, p, tol, solver, max_scale))
    ignorados = DAYS_PER_YEAR - len(tarefas)
    if ignorados:
        logger.warning(f"{transformer_id}: {ignorados} dias fora da verificação (sem observação ou sem estimativa)")

    reais: Dict[str, List[float]] = {WINTER: [], SUMMER: []}
    estimados: Dict[str, List[float]] = {WINTER: [], SUMMER: []}
    for tarefa, resultado in zip(tarefas, map_days(_run_rating_job, tarefas, parallelism)):
        if isinstance(resultado, str):
            logger.warning(f"{transformer_id}: capacidade real do dia {tarefa.day_index} falhou: {resultado}")
            continue
        estacao = season_of(tarefa.day_index)
        reais[estacao].append(resultado.rating_mva)
        estimados[estacao].append(estimated.ratings[tarefa.day_index - 1].rating_mva)

    return (
        _season_report(WINTER, reais[WINTER], estimados[WINTER], transformer_id, estimated.scenario),
        _season_report(SUMMER, reais[SUMMER], estimados[SUMMER], transformer_id, estimated.scenario),
    )


def _mean_composition(observations: Sequence[TransformerDayObservation]) -> LoadComposition:
    media = np.mean([(o.composition.r, o.composition.c, o.composition.i) for o in observations], axis=0)
    return LoadComposition.from_fractions(*media)


def choose_test_set(transformer_ids: Sequence[str], seed: int, fraction: float = TEST_SET_FRACTION) -> Tuple[str, ...]:
    """Sorteio reprodutível de uma fração da frota (ao menos um transformador)."""
    if not 0 < fraction <= 1:
        raise ValueError(f"Fração do conjunto de teste {fraction} fora de (0, 1]")
    ids = sorted(transformer_ids)
    quantidade = max(1, int(round(fraction * len(ids))))
    rng = np.random.default_rng(seed)
    return tuple(sorted(rng.choice(ids, size=quantidade, replace=False).tolist()))


def backtest_fleet(observations: Sequence[TransformerDayObservation], weather: Sequence[HourlyTemperatureDay],
                   calendar: HolidayCalendar, p: ThermalParameters, target_year: int, seed: int,
                   held_out: Optional[Sequence[str]] = None, test_fraction: float = TEST_SET_FRACTION,
                   scenario: str = ACTUAL, offset_c: float = 0.0, **pipeline) -> FleetBacktest:
    """
    Verificação retroativa: estima o ano `target_year` com o histórico dos
    anos anteriores e compara com a capacidade real de cada transformador
    do conjunto de teste.

    A previsão de composição de cada transformador testado é a sua própria
    composição medida em cada dia do ano alvo. Com `scenario` = 'actual' a
    estimativa usa o clima real do ano alvo; com 'high', 'medium' ou 'low'
    usa o cenário montado só com os anos anteriores (dias semelhantes vindos
    do cenário médio). A capacidade real usa sempre o clima real.

    Args:
        held_out: Transformadores a testar; sem eles sorteia `test_fraction` da frota
        scenario: 'actual', 'high', 'medium' ou 'low'
        offset_c: Deslocamento de temperatura dos cenários estimados
        **pipeline: Repassados para annual_rating_profile (tol, k_min, k_max, solver, parallelism, shape_cache...)

    Raises:
        ValueError: Cenário desconhecido, transformador pedido ausente ou sem dados no ano alvo
    """
    if scenario != ACTUAL and scenario not in SCENARIOS:
        raise ValueError(f"Cenário desconhecido: {scenario}")
    ids = sorted({obs.transformer_id for obs in observations})
    if held_out:
        ausentes = [tid for tid in held_out if tid not in ids]
        if ausentes:
            raise ValueError(f"Transformador(es) ausente(s) dos dados: {ausentes}")
        conjunto = tuple(sorted(held_out))
    else:
        conjunto = choose_test_set(ids, seed, test_fraction)
    logger.info(f"Conjunto de teste ({len(conjunto)} de {len(ids)}): {', '.join(conjunto)} | cenário {scenario}")

    anteriores = [d for d in weather if d.date.year < target_year]
    historico = FleetHistory(
        anteriores,
        [obs for obs in observations if obs.date.year < target_year],
        calendar,
    )
    clima_real = scenario_from_year(weather, target_year)
    if scenario == ACTUAL:
        estimativa = referencia = scenario_from_year(weather, target_year, offset_c)
    else:
        cenarios = build_all_scenarios(anteriores, offset_c)
        estimativa, referencia = cenarios[scenario], cenarios[MEDIUM]
    cache = pipeline.pop("shape_cache", None)
    cache = {} if cache is None else cache

    relatorios: Dict[str, Tuple[BacktestReport, BacktestReport]] = {}
    falhas: Dict[str, str] = {}
    for tid in conjunto:
        do_ano = [obs for obs in observations if obs.transformer_id == tid and obs.date.year == target_year]
        if not do_ano:
            raise ValueError(f"{tid} sem observações em {target_year}")
        media = _mean_composition(do_ano)
        por_dia = {day_of_year(obs.date): obs.composition for obs in do_ano}
        previsao = tuple(por_dia.get(d, media) for d in range(1, DAYS_PER_YEAR + 1))
        try:
            estimado = annual_rating_profile(previsao, estimativa, historico, p, seed, target_year=target_year,
                                             shape_cache=cache, reference=referencia, **pipeline)
            relatorios[tid] = backtest(do_ano, estimado, p, clima_real,
                                       tol=pipeline.get("tol", RATING_TOLERANCE),
                                       solver=pipeline.get("solver", BISECTION),
                                       parallelism=pipeline.get("parallelism", PARALLELISM))
        except (RatingError, ValueError) as e:
            logger.error(f"Verificação de {tid} ({scenario}) falhou: {e}")
            falhas[tid] = _describe(e)

    if not relatorios:
        raise RatingError(f"Nenhum transformador verificado no cenário {scenario}: {falhas}")
    media = tuple(
        BacktestReport(
            period=periodo,
            me_pct=float(np.mean([r[pos].me_pct for r in relatorios.values()])),
            ae_pct=float(np.mean([r[pos].ae_pct for r in relatorios.values()])),
            ve_pct=float(np.mean([r[pos].ve_pct for r in relatorios.values()])),
            days=int(sum(r[pos].days for r in relatorios.values())),
            transformer_id="average",
            scenario=scenario,
        )
        for pos, periodo in enumerate((WINTER, SUMMER))
    )
    return FleetBacktest(test_set=conjunto, reports=relatorios, average=media, failures=falhas, scenario=scenario)


def seasonal_summary(profile: AnnualRatingProfile) -> SeasonalSummary:
    """Capacidade média e mínima por estação e a média anual da maior pertinência."""
    por_estacao: Dict[str, List[float]] = {WINTER: [], SUMMER: []}
    pertinencias = []
    for rating in profile.rated():
        por_estacao[season_of(rating.day_index)].append(rating.rating_mva)
        if rating.top_membership is not None:
            pertinencias.append(rating.top_membership)
    for estacao, valores in por_estacao.items():
        if not valores:
            raise RatingError(f"Cenário {profile.scenario} sem dias avaliados no período {estacao}")
    return SeasonalSummary(
        scenario=profile.scenario,
        winter_avg=float(np.mean(por_estacao[WINTER])),
        winter_min=float(np.min(por_estacao[WINTER])),
        summer_avg=float(np.mean(por_estacao[SUMMER])),
        summer_min=float(np.min(por_estacao[SUMMER])),
        average_membership=float(np.mean(pertinencias)) if pertinencias else float("nan"),
        rated_days=len(profile.rated()),
    )


def composition_sensitivity(forecasts: Mapping[str, LoadComposition],
                            scenarios: Mapping[str, AnnualTemperatureScenario], history: FleetHistory,
                            p: ThermalParameters, seed: int, reference: Optional[AnnualTemperatureScenario] = None,
                            **pipeline) -> List[Tuple[str, SeasonalSummary]]:
    """
    Resumo sazonal para cada tipo de carga previsto em cada cenário.

    Para cada tipo de carga os cenários compartilham dias semelhantes e
    perfis (annual_rating_profiles); `reference` segue a mesma regra de lá.

    Returns:
        Lista de (tipo de carga, SeasonalSummary) na ordem de `forecasts` x `scenarios`
    """
    cache = pipeline.pop("shape_cache", None)
    cache = {} if cache is None else cache
    linhas = []
    for tipo, composicao in forecasts.items():
        perfis = annual_rating_profiles(composicao, scenarios, history, p, seed, reference=reference,
                                        shape_cache=cache, **pipeline)
        for nome in scenarios:
            resumo = seasonal_summary(perfis[nome])
            logger.info(f"{tipo} / {nome}: inverno {resumo.winter_avg:.2f} MVA, verão {resumo.summer_avg:.2f} MVA")
            linhas.append((tipo, resumo))
    return linhas
