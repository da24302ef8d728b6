from string import Template

RELATORIO_EXECUCAO = Template(
    "Relatório da execução: $comando\n"
    "Gerado a partir de: $config\n"
    "Semente: $seed | Offset: $offset_c °C | Tolerância: $tolerance | Método: $solver\n"
    "Status: $status\n"
    "\n"
    "$corpo"
)

LINHA_CENARIO = Template(
    "Cenário $scenario: $rated dias com capacidade, $failed sem capacidade | "
    "inverno média $winter_avg MVA (mín $winter_min) | verão média $summer_avg MVA (mín $summer_min)\n"
)

LINHA_FALHA = Template("  - [$scenario] dia $day_index: $reason\n")

LINHA_ERRO = Template("ERRO: $mensagem\n")

RESUMO_VERIFICACAO = Template(
    "Transformador $transformer_id ($scenario)\n"
    "  inverno (out-abr): ME $w_me% | AE $w_ae% | VE $w_ve% ($w_days dias)\n"
    "  verão   (mai-set): ME $s_me% | AE $s_ae% | VE $s_ve% ($s_days dias)\n"
)
