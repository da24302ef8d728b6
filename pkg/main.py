import argparse
import logging
import os
import sys
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np
from dotenv import dotenv_values, load_dotenv

import storage
from data_ingestion import (
    HolidayCalendar,
    fill_gaps,
    parse_forecast_csv,
    parse_holidays,
    parse_transformer_csv,
    parse_weather_csv,
)
from gmm_clustering import GMM_K_MAX
from load_shape import LoadComposition
from rating_engine import (
    BISECTION,
    DEFAULT_LOAD_TYPES,
    RATING_TOLERANCE,
    SOLVERS,
    SUMMER,
    TEST_SET_FRACTION,
    WINTER,
    BacktestReport,
    FleetHistory,
    RatingError,
    annual_rating_profile,
    backtest_fleet,
    check_scenario_ordering,
    composition_sensitivity,
    metric_ae,
    metric_me,
    metric_ve,
    plan_shapes,
    rate_day,
    season_of,
    seasonal_summary,
)
from scheduler import PARALLELISM
from synthetic import DEFAULT_TRANSFORMERS, DEFAULT_YEARS, generate_fixture, write_fixture
from temperature_profiles import ACTUAL, MEDIUM, SCENARIOS, build_all_scenarios, build_scenario_profile
from templates import LINHA_CENARIO, LINHA_ERRO, LINHA_FALHA, RELATORIO_EXECUCAO, RESUMO_VERIFICACAO
from thermal_model import DEFAULT_PRESET, load_thermal_parameters, simulate_day

load_dotenv()

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

ALL_SCENARIOS = "all"
DEFAULT_OUT_DIR = "results"

# Chaves do arquivo de configuração que são caminhos (relativos ao próprio arquivo)
PATH_KEYS = ("WEATHER_CSV", "LOADS_CSV", "COMPOSITIONS_CSV", "HOLIDAYS_FILE", "THERMAL_FILE", "FORECAST_CSV", "OUT_DIR")


@dataclass
class RunConfig:
    """Configuração de uma execução: arquivo .env de execução com sobrescritas da linha de comando."""

    seed: int
    weather_csv: Optional[str] = None
    loads_csv: Optional[str] = None
    compositions_csv: Optional[str] = None
    holidays_file: Optional[str] = None
    thermal_file: Optional[str] = None
    thermal_preset: Optional[str] = None
    forecast_csv: Optional[str] = None
    forecast: Optional[LoadComposition] = None
    offset_c: float = 0.0
    k_min: int = 2
    k_max: int = GMM_K_MAX
    tolerance: float = RATING_TOLERANCE
    out_dir: str = DEFAULT_OUT_DIR
    parallelism: int = PARALLELISM
    plots: bool = True
    backtest_year: Optional[int] = None
    test_set_fraction: float = TEST_SET_FRACTION
    solver: str = BISECTION
    scenario: str = ALL_SCENARIOS
    held_out: List[str] = field(default_factory=list)
    source: str = "linha de comando"


def _parse_bool(texto: str) -> bool:
    return str(texto).strip().lower() in ("1", "true", "yes", "sim", "on")


def load_run_config(path: Optional[str], overrides: Optional[dict] = None) -> RunConfig:
    """
    Lê o arquivo de configuração (formato .env) e aplica as sobrescritas.

    Caminhos relativos do arquivo são resolvidos a partir da pasta do arquivo;
    sobrescritas com valor None são ignoradas.

    Raises:
        ValueError: Arquivo inexistente, valor inválido ou SEED ausente
    """
    valores = {}
    if path:
        if not os.path.isfile(path):
            raise ValueError(f"Arquivo de configuração não encontrado: {path}")
        valores = {k: v for k, v in dotenv_values(path).items() if v not in (None, "")}
        base = os.path.dirname(os.path.abspath(path))
        for chave in PATH_KEYS:
            if chave in valores and not os.path.isabs(valores[chave]):
                valores[chave] = os.path.join(base, valores[chave])
    origem = path or "linha de comando"

    def ler(chave, conversor, padrao=None):
        bruto = valores.get(chave)
        if bruto is None:
            return padrao
        try:
            return conversor(bruto)
        except ValueError:
            raise ValueError(f"{origem}: {chave}='{bruto}' inválido")

    previsao = None
    if "FORECAST_R" in valores or "FORECAST_C" in valores:
        try:
            r = float(valores.get("FORECAST_R", 0))
            c = float(valores.get("FORECAST_C", 0))
            i = float(valores.get("FORECAST_I", max(0.0, 1.0 - r - c)))
            previsao = LoadComposition.from_fractions(r, c, i)
        except ValueError as e:
            raise ValueError(f"{origem}: composição prevista inválida: {e}")

    cfg = RunConfig(
        seed=ler("SEED", int),
        weather_csv=valores.get("WEATHER_CSV"),
        loads_csv=valores.get("LOADS_CSV"),
        compositions_csv=valores.get("COMPOSITIONS_CSV"),
        holidays_file=valores.get("HOLIDAYS_FILE"),
        thermal_file=valores.get("THERMAL_FILE"),
        thermal_preset=valores.get("THERMAL_PRESET"),
        forecast_csv=valores.get("FORECAST_CSV"),
        forecast=previsao,
        offset_c=ler("OFFSET_C", float, 0.0),
        k_min=ler("K_MIN", int, 2),
        k_max=ler("K_MAX", int, GMM_K_MAX),
        tolerance=ler("TOLERANCE", float, RATING_TOLERANCE),
        out_dir=valores.get("OUT_DIR", DEFAULT_OUT_DIR),
        parallelism=ler("PARALLELISM", int, PARALLELISM),
        plots=ler("PLOTS", _parse_bool, True),
        backtest_year=ler("BACKTEST_YEAR", int),
        test_set_fraction=ler("TEST_SET_FRACTION", float, TEST_SET_FRACTION),
        source=origem,
    )
    for chave, valor in (overrides or {}).items():
        if valor is not None:
            cfg = replace(cfg, **{chave: valor})

    if cfg.seed is None:
        raise ValueError(f"{origem}: SEED ausente (informe no arquivo ou com --seed)")
    if cfg.tolerance <= 0:
        raise ValueError(f"{origem}: tolerância deve ser positiva")
    if not 2 <= cfg.k_min <= cfg.k_max:
        raise ValueError(f"{origem}: faixa de K inválida ({cfg.k_min}..{cfg.k_max})")
    if cfg.solver not in SOLVERS:
        raise ValueError(f"{origem}: método desconhecido '{cfg.solver}'")
    return cfg


def _require(cfg: RunConfig, *nomes):
    faltando = [n.upper() for n in nomes if not getattr(cfg, n)]
    if faltando:
        raise ValueError(f"{cfg.source}: faltam {', '.join(faltando)}")


def load_weather(cfg: RunConfig):
    _require(cfg, "weather_csv")
    with open(cfg.weather_csv, encoding="utf-8") as f:
        dias = parse_weather_csv(f)
    return fill_gaps(dias)


def load_calendar(cfg: RunConfig) -> HolidayCalendar:
    if not cfg.holidays_file:
        logger.info("Sem arquivo de feriados: apenas sábados e domingos contam como feriado")
        return HolidayCalendar()
    with open(cfg.holidays_file, encoding="utf-8") as f:
        return parse_holidays(f)


def load_fleet(cfg: RunConfig):
    _require(cfg, "loads_csv", "compositions_csv")
    with open(cfg.loads_csv, encoding="utf-8") as cargas, open(cfg.compositions_csv, encoding="utf-8") as comps:
        return parse_transformer_csv(cargas, comps)


def load_forecast(cfg: RunConfig):
    """365 composições do arquivo de previsão, ou a composição única FORECAST_R/C/I."""
    if cfg.forecast_csv:
        with open(cfg.forecast_csv, encoding="utf-8") as f:
            return parse_forecast_csv(f)
    if cfg.forecast is not None:
        return cfg.forecast
    raise ValueError(f"{cfg.source}: informe FORECAST_CSV ou FORECAST_R/FORECAST_C/FORECAST_I")


def load_params(cfg: RunConfig):
    return load_thermal_parameters(cfg.thermal_file, cfg.thermal_preset or DEFAULT_PRESET)


def _selected(cfg: RunConfig) -> Sequence[str]:
    return SCENARIOS if cfg.scenario == ALL_SCENARIOS else (cfg.scenario,)


def _out(cfg: RunConfig, nome: str) -> str:
    return os.path.join(cfg.out_dir, nome)


def _pipeline(cfg: RunConfig) -> dict:
    return {
        "tol": cfg.tolerance,
        "k_min": cfg.k_min,
        "k_max": cfg.k_max,
        "solver": cfg.solver,
        "parallelism": cfg.parallelism,
    }


class RunReport:
    """Acumula erros e linhas do relatório de uma execução."""

    def __init__(self, comando: str):
        self.comando = comando
        self.erros: List[str] = []
        self.linhas: List[str] = []

    @property
    def ok(self) -> bool:
        return not self.erros

    def erro(self, mensagem: str):
        self.erros.append(mensagem)

    def render(self, cfg: Optional[RunConfig]) -> str:
        corpo = "".join(LINHA_ERRO.substitute(mensagem=m) for m in self.erros) + "".join(self.linhas)
        return RELATORIO_EXECUCAO.substitute(
            comando=self.comando,
            config=cfg.source if cfg else "-",
            seed=cfg.seed if cfg else "-",
            offset_c=cfg.offset_c if cfg else "-",
            tolerance=cfg.tolerance if cfg else "-",
            solver=cfg.solver if cfg else "-",
            status="OK" if self.ok else f"{len(self.erros)} erro(s)",
            corpo=corpo,
        )


def cmd_build_temps(cfg: RunConfig, report: RunReport):
    """Monta e grava os três perfis anuais de temperatura e o resumo de anos de origem."""
    logger.info("=" * 70)
    logger.info(f"🌡️  PERFIS DE TEMPERATURA (offset {cfg.offset_c:+.1f} °C)")
    logger.info("=" * 70)
    cenarios = build_all_scenarios(load_weather(cfg), cfg.offset_c)
    for nome, cenario in cenarios.items():
        caminho = storage.write_scenario_csv(cenario, _out(cfg, f"temperature_{nome}.csv"))
        media = np.mean([dia.daily_mean for _, dia in cenario.days])
        logger.info(f"✅ {nome}: média anual {media:.2f} °C -> {caminho}")
        report.linhas.append(f"Cenário {nome}: média anual {media:.2f} °C\n")
    storage.write_scenario_summary_csv(cenarios, _out(cfg, "temperature_summary.csv"))
    return cenarios


def cmd_rate_year(cfg: RunConfig, report: RunReport):
    """
    Capacidade dinâmica anual em cada cenário pedido.

    Todos os cenários usam os dias semelhantes e os perfis do cenário médio,
    mesmo quando só um é pedido; cenários fora de ordem entram como erro.
    """
    p = load_params(cfg)
    previsao = load_forecast(cfg)
    clima = load_weather(cfg)
    historico = FleetHistory(clima, load_fleet(cfg), load_calendar(cfg))
    cenarios = build_all_scenarios(clima, cfg.offset_c)

    logger.info("=" * 70)
    logger.info(f"⚡ CAPACIDADE DINÂMICA ANUAL - {p.rated_mva:g} MVA nominais, semente {cfg.seed}")
    logger.info("=" * 70)

    pipeline = _pipeline(cfg)
    plano = plan_shapes(previsao, cenarios[MEDIUM], historico, cfg.seed, k_min=pipeline.pop("k_min"),
                        k_max=pipeline.pop("k_max"), parallelism=pipeline["parallelism"])
    perfis, resumos = {}, []
    for nome in _selected(cfg):
        try:
            perfil = annual_rating_profile(previsao, cenarios[nome], historico, p, cfg.seed, plan=plano, **pipeline)
        except RatingError as e:
            logger.error(f"❌ Cenário {nome}: {e}")
            report.erro(str(e))
            continue
        storage.write_rating_csv(perfil, _out(cfg, f"rating_{nome}.csv"))
        perfis[nome] = perfil
        for falha in perfil.failures:
            report.linhas.append(LINHA_FALHA.substitute(scenario=nome, day_index=falha.day_index, reason=falha.reason))
        resumo = seasonal_summary(perfil)
        resumos.append((nome, resumo))
        report.linhas.append(LINHA_CENARIO.substitute(
            scenario=nome, rated=resumo.rated_days, failed=len(perfil.failures),
            winter_avg=f"{resumo.winter_avg:.2f}", winter_min=f"{resumo.winter_min:.2f}",
            summer_avg=f"{resumo.summer_avg:.2f}", summer_min=f"{resumo.summer_min:.2f}",
        ))
        logger.info(f"✅ {nome}: inverno {resumo.winter_avg:.2f} MVA | verão {resumo.summer_avg:.2f} MVA | "
                    f"{len(perfil.failures)} dias sem capacidade")

    try:
        check_scenario_ordering(perfis, cenarios)
    except RatingError as e:
        logger.error(f"❌ Ordem entre cenários: {e}")
        report.erro(str(e))
    if resumos:
        storage.write_summary_csv(resumos, _out(cfg, "rating_summary.csv"))
    if cfg.plots and perfis:
        storage.plot_rating_profiles(list(perfis.values()), p.rated_mva, _out(cfg, "rating_profiles.svg"))
    return list(perfis.values())


def cmd_backtest(cfg: RunConfig, report: RunReport):
    """
    Verificação retroativa de um ou mais transformadores no ano alvo, com o
    clima real e com os cenários alto, médio e baixo dos anos anteriores.
    """
    p = load_params(cfg)
    clima = load_weather(cfg)
    frota = load_fleet(cfg)
    calendario = load_calendar(cfg)
    ano = cfg.backtest_year or max(obs.date.year for obs in frota)

    logger.info("=" * 70)
    logger.info(f"🔁 VERIFICAÇÃO RETROATIVA - ano alvo {ano}")
    logger.info("=" * 70)

    cache: dict = {}
    resultados = {}
    medias: List[BacktestReport] = []
    todos: List[BacktestReport] = []
    for cenario in (ACTUAL,) + SCENARIOS:
        resultado = backtest_fleet(frota, clima, calendario, p, ano, cfg.seed,
                                   held_out=cfg.held_out or None, test_fraction=cfg.test_set_fraction,
                                   scenario=cenario, offset_c=cfg.offset_c, shape_cache=cache, **_pipeline(cfg))
        resultados[cenario] = resultado
        for tid, erro in resultado.failures.items():
            report.erro(f"{tid} ({cenario}): {erro}")
        for tid, (inverno, verao) in resultado.reports.items():
            todos.extend((inverno, verao))
            report.linhas.append(_backtest_lines(tid, cenario, inverno, verao))
        inverno, verao = resultado.average
        medias.extend(resultado.average)
        todos.extend(resultado.average)
        report.linhas.append(_backtest_lines("média", cenario, inverno, verao))
        logger.info(f"✅ {cenario}: inverno ME {inverno.me_pct:.2f}% | verão ME {verao.me_pct:.2f}%")

    storage.write_backtest_csv(medias, _out(cfg, "backtest.csv"), include_scenario=True)
    storage.write_backtest_csv(todos, _out(cfg, "backtest_by_transformer.csv"), include_transformer=True,
                               include_scenario=True)
    return resultados


def _backtest_lines(tid, cenario, inverno: BacktestReport, verao: BacktestReport) -> str:
    return RESUMO_VERIFICACAO.substitute(
        transformer_id=tid, scenario=cenario,
        w_me=f"{inverno.me_pct:.2f}", w_ae=f"{inverno.ae_pct:.2f}", w_ve=f"{inverno.ve_pct:.2f}", w_days=inverno.days,
        s_me=f"{verao.me_pct:.2f}", s_ae=f"{verao.ae_pct:.2f}", s_ve=f"{verao.ve_pct:.2f}", s_days=verao.days,
    )


def _parse_series(texto: str, nome: str) -> List[float]:
    valores = [float(v) for v in texto.split(",")]
    if len(valores) != 24:
        raise ValueError(f"{nome} precisa de 24 valores separados por vírgula, recebeu {len(valores)}")
    return valores


def cmd_simulate_day(cfg: RunConfig, report: RunReport, day: int, loads_pu: Optional[str] = None,
                     ambient: Optional[str] = None):
    """
    Traço térmico de um dia.

    Com --loads-pu e --ambient simula exatamente esses valores; sem eles roda
    o fluxo completo do dia D no cenário pedido e simula o perfil na capacidade.
    """
    p = load_params(cfg)
    if loads_pu or ambient:
        if not (loads_pu and ambient):
            raise ValueError("--loads-pu e --ambient devem ser informados juntos")
        resultado = simulate_day(_parse_series(loads_pu, "--loads-pu"), _parse_series(ambient, "--ambient"), p)
    else:
        nome = MEDIUM if cfg.scenario == ALL_SCENARIOS else cfg.scenario
        clima = load_weather(cfg)
        historico = FleetHistory(clima, load_fleet(cfg), load_calendar(cfg))
        cenario = build_scenario_profile(clima, nome, cfg.offset_c)
        referencia = cenario if nome == MEDIUM else build_scenario_profile(clima, MEDIUM, cfg.offset_c)
        previsao = load_forecast(cfg)
        composicao = previsao if isinstance(previsao, LoadComposition) else previsao[day - 1]
        pipeline = _pipeline(cfg)
        pipeline.pop("parallelism")
        rating, sintese = rate_day(day, composicao, cenario, historico, p, cfg.seed,
                                  reference=referencia, **pipeline)
        storage.write_shape_csv(sintese.shape, _out(cfg, f"shape_day{day:03d}.csv"))
        if sintese.model is not None:
            storage.export_gmm_model(sintese.model, _out(cfg, f"gmm_day{day:03d}.json"))
        resultado = simulate_day(np.asarray(sintese.shape) * rating.scale, cenario.day(day)[1].temps, p)
        logger.info(f"✅ Dia {day} ({nome}): {rating.rating_mva:.2f} MVA (pico {rating.peak_pu:.3f} p.u., "
                    f"K* = {rating.k_star}, origem {rating.date_source})")
        report.linhas.append(f"Dia {day} ({nome}): {rating.rating_mva:.4f} MVA, pico {rating.peak_pu:.4f} p.u.\n")

    storage.write_trace_csv(resultado, _out(cfg, f"trace_day{day:03d}.csv"))
    if cfg.plots:
        storage.plot_thermal_trace(resultado, _out(cfg, f"trace_day{day:03d}.svg"))
    logger.info(f"F_EQA = {resultado.f_eqa:.5f}, θ_H máx = {max(resultado.theta_h):.2f} °C, "
                f"{resultado.iterations} passagens")
    return resultado


def cmd_metrics(actual_csv: str, estimated_csv: str, out_dir: str, report: RunReport):
    """ME, AE e VE entre dois CSVs de capacidade, no total e por estação."""
    real = storage.read_rating_csv(actual_csv)
    estimado = storage.read_rating_csv(estimated_csv)
    comuns = real.index.intersection(estimado.index).sort_values()
    if len(comuns) == 0:
        raise ValueError("Nenhum dia em comum entre os dois arquivos")
    if len(comuns) < max(len(real), len(estimado)):
        logger.warning(f"⚠️  Apenas {len(comuns)} dias em comum entre os arquivos")

    relatorios = []
    for periodo in (WINTER, SUMMER):
        dias = [d for d in comuns if season_of(int(d)) == periodo]
        if not dias:
            continue
        a, e = real.loc[dias].to_numpy(), estimado.loc[dias].to_numpy()
        relatorios.append(BacktestReport(periodo, metric_me(a, e), metric_ae(a, e), metric_ve(a, e), days=len(dias)))
    a, e = real.loc[comuns].to_numpy(), estimado.loc[comuns].to_numpy()
    logger.info(f"📊 {len(comuns)} dias: ME {metric_me(a, e):.3f}% | AE {metric_ae(a, e):.3f}% | VE {metric_ve(a, e):.3f}%")
    report.linhas.append(f"Ano: ME {metric_me(a, e):.4f}% | AE {metric_ae(a, e):.4f}% | VE {metric_ve(a, e):.4f}%\n")
    for r in relatorios:
        report.linhas.append(f"{r.period}: ME {r.me_pct:.4f}% | AE {r.ae_pct:.4f}% | VE {r.ve_pct:.4f}% ({r.days} dias)\n")
    storage.write_backtest_csv(relatorios, os.path.join(out_dir, "metrics.csv"))
    return relatorios


def cmd_sensitivity(cfg: RunConfig, report: RunReport):
    """Resumo sazonal dos quatro tipos de carga de referência em cada cenário."""
    p = load_params(cfg)
    clima = load_weather(cfg)
    historico = FleetHistory(clima, load_fleet(cfg), load_calendar(cfg))
    todos = build_all_scenarios(clima, cfg.offset_c)
    cenarios = {nome: todos[nome] for nome in _selected(cfg)}

    logger.info("=" * 70)
    logger.info("🧪 SENSIBILIDADE À COMPOSIÇÃO DE CARGA")
    logger.info("=" * 70)
    linhas = composition_sensitivity(DEFAULT_LOAD_TYPES, cenarios, historico, p, cfg.seed,
                                     reference=todos[MEDIUM], **_pipeline(cfg))
    storage.write_summary_csv(linhas, _out(cfg, "sensitivity.csv"))
    for tipo, resumo in linhas:
        report.linhas.append(f"{tipo} / {resumo.scenario}: inverno {resumo.winter_avg:.2f} MVA, "
                             f"verão {resumo.summer_avg:.2f} MVA\n")
    return linhas


def cmd_generate_fixture(out_dir: str, transformers: int, years: Sequence[int], seed: int, report: RunReport):
    fixture = generate_fixture(transformers, years, seed)
    caminhos = write_fixture(fixture, out_dir, seed=seed, backtest_year=max(years))
    logger.info(f"✅ Dados sintéticos gravados em {out_dir} (configuração: {caminhos['CONFIG']})")
    report.linhas.append(f"Dados sintéticos: {transformers} transformadores, anos {list(years)}\n")
    return caminhos


def build_parser() -> argparse.ArgumentParser:
    comum = argparse.ArgumentParser(add_help=False)
    comum.add_argument("--config", help="arquivo de configuração da execução (.env)")
    comum.add_argument("--seed", type=int)
    comum.add_argument("--offset-c", type=float, dest="offset_c")
    comum.add_argument("--scenario", choices=list(SCENARIOS) + [ALL_SCENARIOS])
    comum.add_argument("--tolerance", type=float)
    comum.add_argument("--out-dir", dest="out_dir")
    comum.add_argument("--parallelism", type=int)
    comum.add_argument("--k-min", type=int, dest="k_min")
    comum.add_argument("--k-max", type=int, dest="k_max")
    comum.add_argument("--solver", choices=SOLVERS)
    comum.add_argument("--plots", action=argparse.BooleanOptionalAction, default=None)
    comum.add_argument("--verbose", action="store_true")

    parser = argparse.ArgumentParser(description="Capacidade dinâmica anual de transformadores")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("build-temps", parents=[comum], help="perfis anuais de temperatura")
    sub.add_parser("rate-year", parents=[comum], help="capacidade dinâmica dos 365 dias")
    bt = sub.add_parser("backtest", parents=[comum], help="verificação retroativa")
    bt.add_argument("--held-out", action="append", dest="held_out", help="transformador a testar (repetível)")
    bt.add_argument("--test-set-fraction", type=float, dest="test_set_fraction")
    bt.add_argument("--year", type=int, dest="backtest_year")
    sd = sub.add_parser("simulate-day", parents=[comum], help="traço térmico de um dia")
    sd.add_argument("--day", type=int, required=True)
    sd.add_argument("--loads-pu", dest="loads_pu", help="24 cargas em p.u. separadas por vírgula")
    sd.add_argument("--ambient", help="24 temperaturas separadas por vírgula")
    me = sub.add_parser("metrics", parents=[comum], help="ME/AE/VE entre dois CSVs de capacidade")
    me.add_argument("actual")
    me.add_argument("estimated")
    sub.add_parser("sensitivity", parents=[comum], help="sensibilidade à composição de carga")
    gf = sub.add_parser("generate-fixture", parents=[comum], help="gera dados sintéticos")
    gf.add_argument("--transformers", type=int, default=DEFAULT_TRANSFORMERS)
    gf.add_argument("--years", type=int, nargs="+", default=list(DEFAULT_YEARS))
    return parser


OVERRIDE_FLAGS = ("seed", "offset_c", "scenario", "tolerance", "out_dir", "parallelism", "k_min", "k_max",
                  "solver", "plots", "held_out", "test_set_fraction", "backtest_year")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Ponto de entrada da linha de comando.

    Returns:
        0 quando o relatório da execução não tem erros, 1 caso contrário
    """
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    report = RunReport(args.command)
    cfg = None
    out_dir = args.out_dir or DEFAULT_OUT_DIR
    try:
        if args.command == "generate-fixture":
            cmd_generate_fixture(out_dir, args.transformers, args.years, 42 if args.seed is None else args.seed, report)
        elif args.command == "metrics":
            cmd_metrics(args.actual, args.estimated, out_dir, report)
        else:
            overrides = {chave: getattr(args, chave, None) for chave in OVERRIDE_FLAGS}
            cfg = load_run_config(args.config, overrides)
            out_dir = cfg.out_dir
            if args.command == "build-temps":
                cmd_build_temps(cfg, report)
            elif args.command == "rate-year":
                cmd_rate_year(cfg, report)
            elif args.command == "backtest":
                cmd_backtest(cfg, report)
            elif args.command == "simulate-day":
                cmd_simulate_day(cfg, report, args.day, args.loads_pu, args.ambient)
            elif args.command == "sensitivity":
                cmd_sensitivity(cfg, report)
    except KeyboardInterrupt:
        logger.info("Execução interrompida pelo usuário")
        report.erro("interrompido pelo usuário")
    except Exception as e:
        logger.error(f"❌ Erro em {args.command}: {e}", exc_info=True)
        report.erro(str(e))

    caminho = storage.write_run_report(report.render(cfg), os.path.join(out_dir, "run_report.txt"))
    logger.info("=" * 70)
    logger.info(f"{'✅' if report.ok else '❌'} {args.command}: {len(report.erros)} erro(s) - relatório em {caminho}")
    logger.info("=" * 70)
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
