"""
Gravação dos resultados: CSVs de cenários, capacidades, verificação e
traços térmicos, modelo GMM em JSON, relatório da execução e gráficos SVG.
"""

import json
import logging
import math
import os
from typing import Mapping, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from gmm_clustering import GmmModel  # noqa: E402
from rating_engine import SUMMER_MONTHS, AnnualRatingProfile, BacktestReport, SeasonalSummary  # noqa: E402
from temperature_profiles import AnnualTemperatureScenario  # noqa: E402
from thermal_model import DayThermalResult  # noqa: E402

logger = logging.getLogger(__name__)

RATING_COLUMNS = ["day_index", "source_date", "rating_mva", "peak_pu", "f_eqa", "k_star", "top_membership"]
BACKTEST_COLUMNS = ["season", "me_pct", "ae_pct", "ve_pct"]

# SVG sem data nem ids aleatórios: execuções repetidas geram arquivos idênticos
plt.rcParams["svg.hashsalt"] = "dynamic-rating"
SVG_METADATA = {"Date": None}


def _num(valor) -> str:
    """repr do float (leitura de volta sem perda); vazio para None/NaN."""
    if valor is None:
        return ""
    valor = float(valor)
    return "" if math.isnan(valor) else repr(valor)


def _write(frame: pd.DataFrame, path: str) -> str:
    pasta = os.path.dirname(path)
    if pasta:
        os.makedirs(pasta, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    logger.debug(f"Gravado {path} ({len(frame)} linhas)")
    return path


def write_scenario_csv(scenario: AnnualTemperatureScenario, path: str) -> str:
    """day_index,source_date,hour,temp_c (365 x 24 linhas)."""
    linhas = [
        (d, data.isoformat(), hora, _num(t))
        for d, (data, dia) in enumerate(scenario.days, start=1)
        for hora, t in enumerate(dia.temps)
    ]
    return _write(pd.DataFrame(linhas, columns=["day_index", "source_date", "hour", "temp_c"]), path)


def write_scenario_summary_csv(scenarios: Mapping[str, AnnualTemperatureScenario], path: str) -> str:
    """Ano de origem e média diária de cada dia de cada cenário."""
    linhas = [
        (d, nome, data.isoformat(), data.year, _num(dia.daily_mean))
        for nome, cenario in scenarios.items()
        for d, (data, dia) in enumerate(cenario.days, start=1)
    ]
    colunas = ["day_index", "scenario", "source_date", "source_year", "daily_mean_c"]
    return _write(pd.DataFrame(linhas, columns=colunas), path)


def write_rating_csv(profile: AnnualRatingProfile, path: str) -> str:
    """Uma linha por D; dias sem capacidade ficam com os campos vazios."""
    linhas = []
    for d, rating in enumerate(profile.ratings, start=1):
        if rating is None:
            linhas.append((d, "", "", "", "", "", ""))
            continue
        linhas.append((
            d,
            rating.date_source.isoformat() if rating.date_source else "",
            _num(rating.rating_mva),
            _num(rating.peak_pu),
            _num(rating.f_eqa_at_solution),
            "" if rating.k_star is None else rating.k_star,
            _num(rating.top_membership),
        ))
    return _write(pd.DataFrame(linhas, columns=RATING_COLUMNS), path)


def read_rating_csv(path: str) -> pd.Series:
    """
    Lê um CSV de capacidades.

    Returns:
        Série rating_mva indexada por day_index, sem os dias vazios

    Raises:
        ValueError: Colunas day_index/rating_mva ausentes
    """
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    for coluna in ("day_index", "rating_mva"):
        if coluna not in frame.columns:
            raise ValueError(f"{path}: coluna '{coluna}' ausente")
    frame = frame[frame["rating_mva"].str.strip() != ""]
    return pd.Series(
        frame["rating_mva"].map(float).to_numpy(),
        index=frame["day_index"].map(int).to_numpy(),
        name="rating_mva",
    )


def write_backtest_csv(reports: Sequence[BacktestReport], path: str, include_transformer: bool = False,
                       include_scenario: bool = False) -> str:
    """
    season,me_pct,ae_pct,ve_pct,days; com include_transformer a primeira
    coluna é transformer_id e com include_scenario vem a coluna scenario
    antes de season.
    """
    prefixo = (["transformer_id"] if include_transformer else []) + (["scenario"] if include_scenario else [])
    linhas = [
        ([r.transformer_id or ""] if include_transformer else [])
        + ([r.scenario] if include_scenario else [])
        + [r.period, _num(r.me_pct), _num(r.ae_pct), _num(r.ve_pct), r.days]
        for r in reports
    ]
    return _write(pd.DataFrame(linhas, columns=prefixo + BACKTEST_COLUMNS + ["days"]), path)


def write_summary_csv(rows: Sequence[Tuple[str, SeasonalSummary]], path: str) -> str:
    """Capacidade média e mínima de inverno e verão por (rótulo, cenário)."""
    colunas = ["label", "scenario", "winter_avg_mva", "winter_min_mva", "summer_avg_mva", "summer_min_mva",
               "average_membership", "rated_days"]
    linhas = [
        (rotulo, s.scenario, _num(s.winter_avg), _num(s.winter_min), _num(s.summer_avg), _num(s.summer_min),
         _num(s.average_membership), s.rated_days)
        for rotulo, s in rows
    ]
    return _write(pd.DataFrame(linhas, columns=colunas), path)


def write_shape_csv(shape: Sequence[float], path: str) -> str:
    linhas = [(hora, _num(v)) for hora, v in enumerate(shape)]
    return _write(pd.DataFrame(linhas, columns=["hour", "load_pu"]), path)


def write_trace_csv(result: DayThermalResult, path: str) -> str:
    """Traço horário da simulação térmica."""
    frame = pd.DataFrame({
        "hour": range(len(result.loads_pu)),
        "load_pu": [_num(v) for v in result.loads_pu],
        "ambient_c": [_num(v) for v in result.ambient],
        "dtheta_to_c": [_num(v) for v in result.dtheta_to],
        "dtheta_h_c": [_num(v) for v in result.dtheta_h],
        "theta_h_c": [_num(v) for v in result.theta_h],
        "f_aa": [_num(v) for v in result.f_aa],
    })
    return _write(frame, path)


def export_gmm_model(model: GmmModel, path: Optional[str] = None) -> str:
    """JSON do modelo (componentes, k_star e Q_avg); grava em `path` quando informado."""
    texto = json.dumps(model.to_dict(), indent=2)
    if path:
        pasta = os.path.dirname(path)
        if pasta:
            os.makedirs(pasta, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            f.write(texto + "\n")
    return texto


def write_run_report(text: str, path: str) -> str:
    pasta = os.path.dirname(path)
    if pasta:
        os.makedirs(pasta, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    return path


def plot_rating_profiles(profiles: Sequence[AnnualRatingProfile], rated_mva: float, path: str) -> str:
    """Curvas anuais de capacidade (uma por cenário), com a potência nominal tracejada."""
    fig, ax = plt.subplots(figsize=(10, 4))
    dias = np.arange(1, len(profiles[0].ratings) + 1) if profiles else np.arange(1, 366)
    for perfil in profiles:
        ax.plot(dias, perfil.rating_array(), label=perfil.scenario, linewidth=1.0)
    ax.axhline(y=rated_mva, ls=":", color="gray", label="nominal")
    inicio_verao = 1 + sum((31, 28, 31, 30))
    fim_verao = inicio_verao + sum((31, 30, 31, 31, 30)) - 1
    ax.axvspan(inicio_verao, fim_verao, color="orange", alpha=0.08, label=f"verão (meses {SUMMER_MONTHS.start}-{SUMMER_MONTHS.stop - 1})")
    ax.set_xlabel("dia do ano")
    ax.set_ylabel("capacidade dinâmica (MVA)")
    ax.set_xlim(1, len(dias))
    ax.legend(loc="upper left", bbox_to_anchor=(1.01, 1.0))
    fig.subplots_adjust(right=0.8)
    return _save(fig, path)


def plot_thermal_trace(result: DayThermalResult, path: str) -> str:
    """Temperatura do ponto mais quente, topo do óleo e ambiente ao longo do dia."""
    horas = np.arange(1, len(result.theta_h) + 1)
    ambiente = np.asarray(result.ambient)
    fig, ax = plt.subplots(figsize=(8, 3.5))
    ax.plot(horas, result.theta_h, label="ponto mais quente")
    ax.plot(horas, ambiente + np.asarray(result.dtheta_to), label="topo do óleo")
    ax.plot(horas, ambiente, label="ambiente")
    ax.axhline(y=110, ls=":", color="gray")
    ax.set_xlabel("hora")
    ax.set_ylabel("temperatura (°C)")
    ax.set_title(f"F_EQA = {result.f_eqa:.4f}")
    ax.legend(loc="upper left", bbox_to_anchor=(1.01, 1.0))
    fig.subplots_adjust(right=0.75)
    return _save(fig, path)


def _save(fig, path: str) -> str:
    pasta = os.path.dirname(path)
    if pasta:
        os.makedirs(pasta, exist_ok=True)
    fig.savefig(path, format="svg", metadata=SVG_METADATA, bbox_inches="tight")
    plt.close(fig)
    logger.debug(f"Gráfico gravado em {path}")
    return path
