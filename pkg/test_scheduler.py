import operator
from functools import partial

from scheduler import map_days


def test_sequential_map_keeps_order():
    assert map_days(abs, [-3, 1, -2], parallelism=1) == [3, 1, 2]
    assert map_days(abs, [], parallelism=4) == []


def test_process_pool_returns_results_in_input_order():
    itens = list(range(40))
    assert map_days(partial(operator.mul, 3), itens, parallelism=2) == [3 * i for i in itens]
