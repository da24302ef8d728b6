"""
Leitura, validação e preenchimento de lacunas dos dados de clima, carga dos
transformadores e composição de carga; classificação dos dias do calendário.

Os arquivos seguem os esquemas:
    clima:       timestamp,temp_c                                  (YYYY-MM-DDTHH:00, hora local)
    cargas:      transformer_id,timestamp,load_mva
    composições: transformer_id,date,r_frac,c_frac,i_frac
    feriados:    uma data YYYY-MM-DD por linha
    previsão:    date_range,r_frac,c_frac,i_frac                   (MM-DD:MM-DD)
"""

import datetime
import enum
import io
import logging
import math
import os
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from load_shape import LoadComposition

load_dotenv()

logger = logging.getLogger(__name__)

HOURS = 24
DAYS_PER_YEAR = 365

MAX_GAP_HOURS = int(os.getenv("MAX_GAP_HOURS", "3"))
TEMP_SANITY_C = float(os.getenv("TEMP_SANITY_C", "60"))
COMPOSITION_TOL = 1e-6

WEATHER_COLUMNS = ["timestamp", "temp_c"]
LOADS_COLUMNS = ["transformer_id", "timestamp", "load_mva"]
COMPOSITION_COLUMNS = ["transformer_id", "date", "r_frac", "c_frac", "i_frac"]
FORECAST_COLUMNS = ["date_range", "r_frac", "c_frac", "i_frac"]

TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M"


class IngestionError(ValueError):
    """Erro de dados de entrada, com arquivo e linha quando conhecidos."""

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        prefixo = ""
        if source:
            prefixo += f"{source}: "
        if line is not None:
            prefixo += f"linha {line}: "
        super().__init__(prefixo + message)


class DayType(enum.Enum):
    WORKDAY = "workday"
    HOLIDAY = "holiday"


@dataclass(frozen=True)
class HolidayCalendar:
    """Feriados explícitos. Sábados e domingos são feriados por regra e não precisam constar."""

    dates: FrozenSet[datetime.date] = frozenset()


@dataclass(frozen=True)
class HourlyTemperatureDay:
    """
    Data do calendário e 24 temperaturas horárias (°C).

    Valores NaN marcam horas ausentes; só aparecem em dias recém-lidos,
    antes de fill_gaps.
    """

    date: datetime.date
    temps: Tuple[float, ...]

    def __post_init__(self):
        if len(self.temps) != HOURS:
            raise ValueError(f"{self.date}: esperadas {HOURS} temperaturas, recebidas {len(self.temps)}")
        for hora, valor in enumerate(self.temps):
            if math.isnan(valor):
                continue
            if math.isinf(valor) or abs(valor) > TEMP_SANITY_C:
                raise ValueError(f"{self.date} hora {hora}: temperatura {valor} fora de [-{TEMP_SANITY_C}, {TEMP_SANITY_C}]")

    @property
    def is_complete(self) -> bool:
        return not any(math.isnan(v) for v in self.temps)

    @property
    def daily_mean(self) -> float:
        return float(np.mean(self.temps))

    def shifted(self, offset_c: float) -> "HourlyTemperatureDay":
        """
        Raises:
            IngestionError: Alguma hora deslocada sai da faixa de sanidade
        """
        deslocado = tuple(t + offset_c for t in self.temps)
        extremo = max((abs(t) for t in deslocado if not math.isnan(t)), default=0.0)
        if extremo > TEMP_SANITY_C:
            raise IngestionError(
                f"{self.date}: offset {offset_c:+g} °C leva a temperatura a {extremo:g} °C, "
                f"fora de [-{TEMP_SANITY_C}, {TEMP_SANITY_C}]",
                source="offset",
            )
        return HourlyTemperatureDay(date=self.date, temps=deslocado)


@dataclass(frozen=True)
class TransformerDayObservation:
    transformer_id: str
    date: datetime.date
    loads: Tuple[float, ...]
    composition: LoadComposition

    def __post_init__(self):
        if len(self.loads) != HOURS:
            raise ValueError(f"{self.transformer_id} {self.date}: esperadas {HOURS} cargas, recebidas {len(self.loads)}")
        if any((not math.isfinite(v)) or v < 0 for v in self.loads):
            raise ValueError(f"{self.transformer_id} {self.date}: cargas devem ser finitas e >= 0")
        if max(self.loads) <= 0:
            raise ValueError(f"{self.transformer_id} {self.date}: dia sem nenhuma carga positiva")


def is_leap_day(date: datetime.date) -> bool:
    return date.month == 2 and date.day == 29


def day_of_year(date: datetime.date) -> int:
    """
    Posição do dia no calendário de 365 dias (1 = 1º de janeiro, 365 = 31 de dezembro).

    Em anos bissextos o 29 de fevereiro não existe nesse calendário e os dias
    seguintes recuam uma posição.
    """
    if is_leap_day(date):
        raise ValueError(f"{date} não pertence ao calendário de 365 dias")
    d = date.timetuple().tm_yday
    if date.month > 2 and _is_leap_year(date.year):
        d -= 1
    return d


def date_for_day_index(year: int, d: int) -> datetime.date:
    """Inverso de day_of_year para um ano específico."""
    if not 1 <= d <= DAYS_PER_YEAR:
        raise ValueError(f"Índice de dia {d} fora de 1..{DAYS_PER_YEAR}")
    base = datetime.date(2001, 1, 1) + datetime.timedelta(days=d - 1)
    return datetime.date(year, base.month, base.day)


def _is_leap_year(year: int) -> bool:
    return year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)


def classify_day(date: datetime.date, cal: HolidayCalendar) -> DayType:
    """Feriado se sábado, domingo ou listado no calendário; dia útil caso contrário."""
    if date.weekday() >= 5 or date in cal.dates:
        return DayType.HOLIDAY
    return DayType.WORKDAY


def _read_frame(content, columns, source) -> pd.DataFrame:
    try:
        frame = pd.read_csv(content, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise IngestionError("arquivo vazio", line=1, source=source)
    except pd.errors.ParserError as e:
        raise IngestionError(f"CSV malformado: {e}", source=source)
    cabecalho = [c.strip() for c in frame.columns]
    if cabecalho != columns:
        raise IngestionError(f"cabeçalho {cabecalho}, esperado {columns}", line=1, source=source)
    frame.columns = cabecalho
    return frame.apply(lambda col: col.str.strip())


def _to_float(text):
    try:
        return float(text)
    except (TypeError, ValueError):
        return math.nan


def _parse_timestamps(series: pd.Series, source) -> pd.Series:
    ts = pd.to_datetime(series, format=TIMESTAMP_FORMAT, errors="coerce")
    invalidos = ts.isna() | (ts.dt.minute != 0)
    if invalidos.any():
        idx = int(np.argmax(invalidos.to_numpy()))
        raise IngestionError(f"timestamp inválido '{series.iloc[idx]}'", line=idx + 2, source=source)
    return ts


def _first_line(mask: pd.Series) -> int:
    return int(np.argmax(mask.to_numpy())) + 2


def parse_weather_csv(content) -> List[HourlyTemperatureDay]:
    """
    Lê o histórico horário de temperatura.

    Args:
        content: Stream de texto no esquema timestamp,temp_c

    Returns:
        Um HourlyTemperatureDay por data, em ordem crescente, sem 29 de fevereiro.
        Horas ausentes ou com valor vazio ficam como NaN até fill_gaps.

    Raises:
        IngestionError: Linha malformada, (data, hora) duplicada ou temperatura não numérica
    """
    source = getattr(content, "name", "clima")
    frame = _read_frame(content, WEATHER_COLUMNS, source)
    ts = _parse_timestamps(frame["timestamp"], source)

    duplicados = ts.duplicated()
    if duplicados.any():
        raise IngestionError(f"(data, hora) duplicada: {frame['timestamp'][duplicados].iloc[0]}",
                             line=_first_line(duplicados), source=source)

    vazios = frame["temp_c"] == ""
    temps = frame["temp_c"].map(_to_float)
    nao_numericos = temps.isna() & ~vazios
    if nao_numericos.any():
        raise IngestionError(f"temperatura não numérica '{frame['temp_c'][nao_numericos].iloc[0]}'",
                             line=_first_line(nao_numericos), source=source)

    fora = temps.abs() > TEMP_SANITY_C
    if fora.any():
        logger.warning(f"{source}: {int(fora.sum())} temperaturas fora de ±{TEMP_SANITY_C} °C tratadas como ausentes")
        temps = temps.mask(fora)

    tabela = pd.DataFrame({"date": ts.dt.date, "hour": ts.dt.hour, "temp": temps})
    bissextos = tabela["date"].map(is_leap_day)
    if bissextos.any():
        logger.warning(f"{source}: {int(bissextos.sum())} linhas de 29 de fevereiro descartadas")
        tabela = tabela[~bissextos]

    grade = tabela.pivot(index="date", columns="hour", values="temp").reindex(columns=range(HOURS))
    grade = grade.sort_index()
    dias = [
        HourlyTemperatureDay(date=data, temps=tuple(float(v) for v in linha))
        for data, linha in zip(grade.index, grade.to_numpy())
    ]
    logger.info(f"{source}: {len(dias)} dias de temperatura lidos")
    return dias


def parse_transformer_csv(content, compositions) -> List[TransformerDayObservation]:
    """
    Lê as cargas horárias por transformador e junta com as composições diárias.

    Dias com menos de 24 horas ou com carga nula o dia todo são descartados
    com aviso; 29 de fevereiro também.

    Args:
        content: Stream no esquema transformer_id,timestamp,load_mva
        compositions: Stream no esquema transformer_id,date,r_frac,c_frac,i_frac

    Returns:
        Observações ordenadas por (transformer_id, date)

    Raises:
        IngestionError: Valores inválidos, duplicados ou composição ausente
    """
    source = getattr(content, "name", "cargas")
    frame = _read_frame(content, LOADS_COLUMNS, source)
    ts = _parse_timestamps(frame["timestamp"], source)

    loads = frame["load_mva"].map(_to_float)
    invalidos = loads.isna() | ~np.isfinite(loads) | (loads < 0)
    if invalidos.any():
        raise IngestionError(f"carga inválida '{frame['load_mva'][invalidos].iloc[0]}'",
                             line=_first_line(invalidos), source=source)

    tabela = pd.DataFrame({
        "transformer_id": frame["transformer_id"],
        "date": ts.dt.date,
        "hour": ts.dt.hour,
        "load": loads,
    })
    duplicados = tabela.duplicated(subset=["transformer_id", "date", "hour"])
    if duplicados.any():
        raise IngestionError("(transformador, data, hora) duplicado", line=_first_line(duplicados), source=source)

    composicoes = _parse_compositions(compositions)

    bissextos = tabela["date"].map(is_leap_day)
    if bissextos.any():
        logger.warning(f"{source}: {int(bissextos.sum())} linhas de 29 de fevereiro descartadas")
        tabela = tabela[~bissextos]

    grade = tabela.pivot(index=["transformer_id", "date"], columns="hour", values="load")
    grade = grade.reindex(columns=range(HOURS)).sort_index()

    observacoes = []
    incompletos = 0
    nulos = 0
    for (tid, data), linha in zip(grade.index, grade.to_numpy()):
        if np.isnan(linha).any():
            incompletos += 1
            logger.debug(f"{source}: {tid} {data} incompleto, descartado")
            continue
        if linha.max() <= 0:
            nulos += 1
            logger.debug(f"{source}: {tid} {data} sem carga, descartado")
            continue
        chave = (tid, data)
        if chave not in composicoes:
            raise IngestionError(f"composição ausente para {tid} em {data}", source=source)
        observacoes.append(
            TransformerDayObservation(
                transformer_id=tid,
                date=data,
                loads=tuple(float(v) for v in linha),
                composition=composicoes[chave],
            )
        )
    if incompletos:
        logger.warning(f"{source}: {incompletos} dias de transformador incompletos descartados")
    if nulos:
        logger.warning(f"{source}: {nulos} dias de transformador sem carga descartados")
    logger.info(f"{source}: {len(observacoes)} observações diárias de transformadores")
    return observacoes


def _parse_compositions(content) -> Dict[Tuple[str, datetime.date], LoadComposition]:
    source = getattr(content, "name", "composições")
    frame = _read_frame(content, COMPOSITION_COLUMNS, source)
    datas = pd.to_datetime(frame["date"], format="%Y-%m-%d", errors="coerce")
    if datas.isna().any():
        raise IngestionError(f"data inválida '{frame['date'][datas.isna()].iloc[0]}'",
                             line=_first_line(datas.isna()), source=source)

    resultado = {}
    for pos, (tid, data, r, c, i) in enumerate(zip(
        frame["transformer_id"], datas.dt.date, frame["r_frac"], frame["c_frac"], frame["i_frac"]
    )):
        linha = pos + 2
        fracoes = [_to_float(v) for v in (r, c, i)]
        if any(math.isnan(v) for v in fracoes):
            raise IngestionError("fração não numérica", line=linha, source=source)
        if any(v < 0.0 or v > 1.0 for v in fracoes):
            raise IngestionError(f"fração fora de [0, 1]: {fracoes}", line=linha, source=source)
        if (tid, data) in resultado:
            raise IngestionError(f"composição duplicada para {tid} em {data}", line=linha, source=source)
        try:
            resultado[(tid, data)] = LoadComposition.from_fractions(*fracoes, tol=COMPOSITION_TOL)
        except ValueError as e:
            raise IngestionError(str(e), line=linha, source=source)
    return resultado


def fill_gaps(days: Sequence[HourlyTemperatureDay], max_gap_hours: int = MAX_GAP_HOURS,
              removed: Optional[list] = None) -> List[HourlyTemperatureDay]:
    """
    Interpola linearmente sequências de até max_gap_hours horas ausentes.

    A interpolação usa os vizinhos ao longo de dias consecutivos. Dias com
    lacunas mais longas, ou sem vizinho de um dos lados, são removidos e
    registrados em log (e em `removed`, se fornecido).

    Args:
        days: Dias em ordem crescente
        max_gap_hours: Maior sequência de horas ausentes que pode ser preenchida
        removed: Lista opcional que recebe as datas removidas

    Returns:
        Somente dias completos, em ordem crescente
    """
    if max_gap_hours < 0:
        raise ValueError(f"max_gap_hours deve ser >= 0, recebeu {max_gap_hours}")
    if all(d.is_complete for d in days):
        return list(days)

    resultado = []
    for bloco in _consecutive_blocks(days):
        serie = pd.Series(np.concatenate([np.asarray(d.temps, dtype=float) for d in bloco]))
        ausente = serie.isna()
        if ausente.any():
            grupo = (ausente != ausente.shift()).cumsum()
            tamanho = ausente.groupby(grupo).transform("sum")
            preenchida = serie.interpolate(method="linear", limit_area="inside")
            serie = preenchida.mask(ausente & (tamanho > max_gap_hours))
        valores = serie.to_numpy().reshape(len(bloco), HOURS)
        for dia, linha in zip(bloco, valores):
            if np.isnan(linha).any():
                logger.warning(f"Dia {dia.date} removido: lacuna maior que {max_gap_hours} h")
                if removed is not None:
                    removed.append(dia.date)
                continue
            resultado.append(HourlyTemperatureDay(date=dia.date, temps=tuple(float(v) for v in linha)))
    return resultado


def _consecutive_blocks(days: Sequence[HourlyTemperatureDay]) -> List[List[HourlyTemperatureDay]]:
    blocos = []
    for dia in days:
        if blocos and _next_day(blocos[-1][-1].date) == dia.date:
            blocos[-1].append(dia)
        else:
            blocos.append([dia])
    return blocos


def _next_day(date: datetime.date) -> datetime.date:
    seguinte = date + datetime.timedelta(days=1)
    if is_leap_day(seguinte):
        seguinte += datetime.timedelta(days=1)
    return seguinte


def parse_holidays(content) -> HolidayCalendar:
    """Uma data YYYY-MM-DD por linha; linhas vazias e comentários (#) são ignorados."""
    source = getattr(content, "name", "feriados")
    datas = set()
    for numero, linha in enumerate(content.read().splitlines(), start=1):
        texto = linha.strip()
        if not texto or texto.startswith("#"):
            continue
        try:
            datas.add(datetime.date.fromisoformat(texto))
        except ValueError:
            raise IngestionError(f"data de feriado inválida '{texto}'", line=numero, source=source)
    return HolidayCalendar(dates=frozenset(datas))


def parse_forecast_csv(content) -> Tuple[LoadComposition, ...]:
    """
    Composição prevista por dia do perfil.

    `date_range` é MM-DD:MM-DD inclusivo no calendário de 365 dias, podendo
    atravessar a virada do ano. Linhas posteriores sobrescrevem as anteriores.

    Returns:
        365 composições, índice 0 = dia 1
    """
    source = getattr(content, "name", "previsão")
    frame = _read_frame(content, FORECAST_COLUMNS, source)
    por_dia: List[Optional[LoadComposition]] = [None] * DAYS_PER_YEAR
    for pos, (faixa, r, c, i) in enumerate(zip(frame["date_range"], frame["r_frac"], frame["c_frac"], frame["i_frac"])):
        linha = pos + 2
        try:
            inicio, fim = (day_of_year(datetime.date(2001, int(p[:2]), int(p[3:5]))) for p in faixa.split(":"))
            comp = LoadComposition.from_fractions(_to_float(r), _to_float(c), _to_float(i), tol=COMPOSITION_TOL)
        except (ValueError, IndexError) as e:
            raise IngestionError(f"linha de previsão inválida '{faixa}': {e}", line=linha, source=source)
        d = inicio
        while True:
            por_dia[d - 1] = comp
            if d == fim:
                break
            d = d % DAYS_PER_YEAR + 1
    faltando = [d + 1 for d, comp in enumerate(por_dia) if comp is None]
    if faltando:
        raise IngestionError(f"{len(faltando)} dias sem composição prevista (primeiro: dia {faltando[0]})", source=source)
    return tuple(por_dia)


def serialize_weather_csv(days: Sequence[HourlyTemperatureDay]) -> str:
    """Texto CSV no esquema de clima; floats em repr para leitura de volta sem perda."""
    linhas = [
        (f"{dia.date.isoformat()}T{hora:02d}:00", "" if math.isnan(t) else repr(float(t)))
        for dia in days
        for hora, t in enumerate(dia.temps)
    ]
    buffer = io.StringIO()
    pd.DataFrame(linhas, columns=WEATHER_COLUMNS).to_csv(buffer, index=False)
    return buffer.getvalue()


def serialize_transformer_csv(observations: Sequence[TransformerDayObservation]) -> Tuple[str, str]:
    """Textos CSV (cargas, composições) das observações."""
    cargas = [
        (obs.transformer_id, f"{obs.date.isoformat()}T{hora:02d}:00", repr(float(v)))
        for obs in observations
        for hora, v in enumerate(obs.loads)
    ]
    composicoes = [
        (obs.transformer_id, obs.date.isoformat(),
         repr(obs.composition.r), repr(obs.composition.c), repr(obs.composition.i))
        for obs in observations
    ]
    buf_cargas, buf_comp = io.StringIO(), io.StringIO()
    pd.DataFrame(cargas, columns=LOADS_COLUMNS).to_csv(buf_cargas, index=False)
    pd.DataFrame(composicoes, columns=COMPOSITION_COLUMNS).to_csv(buf_comp, index=False)
    return buf_cargas.getvalue(), buf_comp.getvalue()
