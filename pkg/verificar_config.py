#!/usr/bin/env python3
"""
Script para verificar se um arquivo de configuração de execução está pronto:
arquivos existem e são lidos, SEED presente e parâmetros térmicos válidos.

Uso:
    python3 verificar_config.py run.env
"""

import os
import sys

from dotenv import load_dotenv

from main import load_calendar, load_fleet, load_forecast, load_params, load_run_config, load_weather

load_dotenv()


def verificar(caminho):
    """
    Returns:
        (erros, avisos) como listas de mensagens
    """
    erros = []
    avisos = []

    try:
        cfg = load_run_config(caminho)
    except ValueError as e:
        return [f"❌ {e}"], avisos
    print(f"✅ Configuração lida: {cfg.source} (SEED={cfg.seed})")

    for nome in ("weather_csv", "loads_csv", "compositions_csv", "holidays_file", "thermal_file", "forecast_csv"):
        valor = getattr(cfg, nome)
        if valor and not os.path.isfile(valor):
            erros.append(f"❌ {nome.upper()} aponta para arquivo inexistente: {valor}")
    if erros:
        return erros, avisos

    verificacoes = (
        ("Clima", load_weather, True),
        ("Frota", load_fleet, True),
        ("Feriados", load_calendar, False),
        ("Previsão de composição", load_forecast, False),
        ("Parâmetros térmicos", load_params, True),
    )
    for rotulo, funcao, obrigatorio in verificacoes:
        try:
            resultado = funcao(cfg)
        except Exception as e:
            mensagem = f"{rotulo}: {e}"
            if obrigatorio:
                erros.append(f"❌ {mensagem}")
            else:
                avisos.append(f"⚠️  {mensagem} (necessário para rate-year e simulate-day)")
            continue
        tamanho = f" ({len(resultado)} registros)" if hasattr(resultado, "__len__") and not isinstance(resultado, str) else ""
        print(f"✅ {rotulo}{tamanho}")

    if not cfg.holidays_file:
        avisos.append("⚠️  HOLIDAYS_FILE não configurado (apenas sábados e domingos serão feriados)")
    if cfg.parallelism > (os.cpu_count() or 1):
        avisos.append(f"⚠️  PARALLELISM={cfg.parallelism} maior que o número de CPUs ({os.cpu_count()})")
    return erros, avisos


if __name__ == "__main__":
    if len(sys.argv) != 2:
        print("Uso: python3 verificar_config.py <arquivo de configuração>")
        sys.exit(2)

    print("🔍 Verificando configuração...")
    print("=" * 70)
    erros, avisos = verificar(sys.argv[1])

    print()
    print("📋 Resultado da Verificação:")
    print("=" * 70)

    if erros:
        print("\n🚫 ERROS (impedem o funcionamento):")
        for erro in erros:
            print(f"  {erro}")
    else:
        print("\n✅ Arquivos e parâmetros obrigatórios estão OK!")

    if avisos:
        print("\n⚠️  AVISOS:")
        for aviso in avisos:
            print(f"  {aviso}")

    print()
    print("=" * 70)

    if erros:
        print("\n❌ Corrija os erros acima antes de executar.")
        sys.exit(1)
    print("\n✅ Configuração OK! Para rodar:")
    print(f"  ./run.sh rate-year --config {sys.argv[1]}")
    sys.exit(0)
