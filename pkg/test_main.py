import os

import numpy as np
import pandas as pd
import pytest

import main
import verificar_config
from rating_engine import RatingError
from storage import BACKTEST_COLUMNS, RATING_COLUMNS


@pytest.fixture(scope="module")
def fixture_dir(tmp_path_factory):
    pasta = tmp_path_factory.mktemp("dados")
    codigo = main.main(["generate-fixture", "--out-dir", str(pasta), "--transformers", "4",
                        "--years", "2017", "2018", "--seed", "7"])
    assert codigo == 0
    return pasta


def _config(pasta):
    return str(pasta / "run.env")


def test_generate_fixture_writes_inputs_and_config(fixture_dir):
    for nome in ("weather.csv", "loads.csv", "compositions.csv", "holidays.txt", "forecast.csv", "run.env"):
        assert (fixture_dir / nome).is_file()
    config = (fixture_dir / "run.env").read_text()
    assert "SEED=7" in config
    assert "BACKTEST_YEAR=2018" in config


def test_run_config_resolves_paths_and_overrides(fixture_dir):
    cfg = main.load_run_config(_config(fixture_dir), {"seed": 99, "offset_c": None})
    assert cfg.seed == 99
    assert cfg.offset_c == 0.0
    assert cfg.weather_csv == os.path.join(str(fixture_dir), "weather.csv")
    assert cfg.out_dir == os.path.join(str(fixture_dir), "results")


def test_build_temps(fixture_dir, tmp_path):
    base, deslocado = tmp_path / "base", tmp_path / "offset"
    assert main.main(["build-temps", "--config", _config(fixture_dir), "--out-dir", str(base)]) == 0
    assert main.main(["build-temps", "--config", _config(fixture_dir), "--out-dir", str(deslocado),
                      "--offset-c", "1.0"]) == 0
    for nome in ("high", "medium", "low"):
        a = pd.read_csv(base / f"temperature_{nome}.csv")
        b = pd.read_csv(deslocado / f"temperature_{nome}.csv")
        assert len(a) == 365 * 24
        assert np.allclose(b["temp_c"] - a["temp_c"], 1.0, atol=1e-9)
    assert (base / "temperature_summary.csv").is_file()
    assert "OK" in (base / "run_report.txt").read_text()


def test_rate_year_is_deterministic(fixture_dir, tmp_path):
    primeira, segunda = tmp_path / "a", tmp_path / "b"
    argumentos = ["rate-year", "--config", _config(fixture_dir), "--scenario", "high", "--k-max", "4"]
    assert main.main(argumentos + ["--out-dir", str(primeira)]) == 0
    assert main.main(argumentos + ["--out-dir", str(segunda), "--no-plots"]) == 0

    texto = (primeira / "rating_high.csv").read_bytes()
    assert texto == (segunda / "rating_high.csv").read_bytes()
    tabela = pd.read_csv(primeira / "rating_high.csv")
    assert list(tabela.columns) == RATING_COLUMNS
    assert len(tabela) == 365
    assert (primeira / "rating_profiles.svg").is_file()
    assert not (segunda / "rating_profiles.svg").exists()
    assert not (primeira / "rating_low.csv").exists()


def test_missing_seed_fails_with_report(fixture_dir, tmp_path):
    config = tmp_path / "sem_seed.env"
    linhas = [linha for linha in (fixture_dir / "run.env").read_text().splitlines() if not linha.startswith("SEED=")]
    linhas = [f"{linha.split('=')[0]}={fixture_dir / linha.split('=')[1]}" if linha.endswith((".csv", ".txt")) else linha
              for linha in linhas]
    config.write_text("\n".join(linhas) + "\n")
    saida = tmp_path / "saida"
    assert main.main(["build-temps", "--config", str(config), "--out-dir", str(saida)]) == 1
    assert "SEED" in (saida / "run_report.txt").read_text()


def test_missing_input_file_fails(tmp_path):
    config = tmp_path / "run.env"
    config.write_text("WEATHER_CSV=nao_existe.csv\nSEED=1\n")
    assert main.main(["build-temps", "--config", str(config), "--out-dir", str(tmp_path / "out")]) == 1


def test_metrics_command(tmp_path):
    real = tmp_path / "real.csv"
    estimado = tmp_path / "estimado.csv"
    real.write_text("day_index,rating_mva\n1,100.0\n2,100.0\n150,100.0\n151,100.0\n")
    estimado.write_text("day_index,rating_mva\n1,90.0\n2,110.0\n150,110.0\n151,110.0\n")
    assert main.main(["metrics", str(real), str(estimado), "--out-dir", str(tmp_path)]) == 0

    tabela = pd.read_csv(tmp_path / "metrics.csv")
    assert list(tabela.columns) == BACKTEST_COLUMNS + ["days"]
    inverno = tabela[tabela["season"] == "winter"].iloc[0]
    verao = tabela[tabela["season"] == "summer"].iloc[0]
    assert inverno["me_pct"] == pytest.approx(10.0)
    assert inverno["ae_pct"] == pytest.approx(0.0)
    assert verao["ae_pct"] == pytest.approx(10.0)
    assert verao["ve_pct"] == pytest.approx(10.0)


def test_simulate_day_with_explicit_series(tmp_path):
    argumentos = ["simulate-day", "--seed", "1", "--day", "12", "--out-dir", str(tmp_path), "--no-plots",
                  "--loads-pu", ",".join(["1.0"] * 24), "--ambient", ",".join(["30"] * 24)]
    assert main.main(argumentos) == 0
    traco = pd.read_csv(tmp_path / "trace_day012.csv")
    assert np.allclose(traco["theta_h_c"], 110.0, atol=0.05)
    assert not (tmp_path / "trace_day012.svg").exists()


def test_backtest_command(fixture_dir, tmp_path):
    argumentos = ["backtest", "--config", _config(fixture_dir), "--out-dir", str(tmp_path),
                  "--held-out", "TX02", "--k-max", "4"]
    assert main.main(argumentos) == 0
    media = pd.read_csv(tmp_path / "backtest.csv")
    assert list(media.columns) == ["scenario"] + BACKTEST_COLUMNS + ["days"]
    assert list(media["scenario"]) == ["actual", "actual", "high", "high", "medium", "medium", "low", "low"]
    assert list(media["season"]) == ["winter", "summer"] * 4
    por_transformador = pd.read_csv(tmp_path / "backtest_by_transformer.csv")
    assert list(por_transformador["transformer_id"]) == ["TX02", "TX02", "average", "average"] * 4
    relatorio = (tmp_path / "run_report.txt").read_text(encoding="utf-8")
    assert "Transformador TX02 (high)" in relatorio
    assert (por_transformador[["me_pct", "ae_pct", "ve_pct"]] >= 0).all().all()


def test_verificar_config(fixture_dir, tmp_path):
    erros, avisos = verificar_config.verificar(_config(fixture_dir))
    assert erros == []
    assert not any("HOLIDAYS_FILE" in aviso for aviso in avisos)

    quebrado = tmp_path / "quebrado.env"
    quebrado.write_text(f"SEED=1\nWEATHER_CSV={tmp_path / 'sumiu.csv'}\n")
    erros, _ = verificar_config.verificar(str(quebrado))
    assert any("WEATHER_CSV" in erro for erro in erros)


def test_rate_year_reports_out_of_order_scenarios(fixture_dir, tmp_path, monkeypatch):
    def fora_de_ordem(perfis, cenarios):
        raise RatingError("1 dias com cenário mais quente acima do mais frio: D=200")

    monkeypatch.setattr(main, "check_scenario_ordering", fora_de_ordem)
    argumentos = ["rate-year", "--config", _config(fixture_dir), "--scenario", "high", "--k-max", "4",
                  "--no-plots", "--out-dir", str(tmp_path)]
    assert main.main(argumentos) == 1
    assert (tmp_path / "rating_high.csv").is_file()
    assert "D=200" in (tmp_path / "run_report.txt").read_text(encoding="utf-8")
