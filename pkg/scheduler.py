import logging
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Sequence, TypeVar

from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)

PARALLELISM = int(os.getenv("PARALLELISM", "1"))

T = TypeVar("T")
R = TypeVar("R")


def map_days(func: Callable[[T], R], items: Sequence[T], parallelism: int = PARALLELISM) -> List[R]:
    """
    Executa `func` sobre cada item (um dia ou uma tarefa independente).

    Com parallelism > 1 usa um pool de processos; `func` e os itens precisam
    ser serializáveis (funções de módulo ou functools.partial delas). Os
    resultados voltam sempre na ordem dos itens, o que mantém as reduções
    determinísticas independentemente do grau de paralelismo.

    Args:
        func: Função aplicada a cada item
        items: Itens independentes
        parallelism: Número de processos (1 = laço simples no processo atual)

    Returns:
        Lista de resultados na ordem de `items`
    """
    itens = list(items)
    if parallelism <= 1 or len(itens) <= 1:
        return [func(item) for item in itens]

    trabalhadores = min(parallelism, len(itens))
    lote = max(1, len(itens) // (trabalhadores * 4))
    logger.debug(f"Distribuindo {len(itens)} tarefas em {trabalhadores} processos (lote {lote})")
    try:
        with ProcessPoolExecutor(max_workers=trabalhadores) as executor:
            return list(executor.map(func, itens, chunksize=lote))
    except KeyboardInterrupt:
        logger.info("Execução paralela interrompida pelo usuário")
        raise
