#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
测试相关度、紧密度、邻近度和可互换度
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

# 添加项目根目录到Python路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from instance_factory import brute_force_makespan, line_instance, random_line_instance, request_orders, swap_instance
from measures import (build_measure_table, closeness, closeness_by_order, interchangeability, proximity,
                      relatedness)
from schedule import Route, make_solution


def test_relatedness_of_distinct_requests():
    instance = swap_instance()
    a, r = instance.request(1), instance.request(2)
    # 起点相距80、终点相距140，最大行驶时间140，时间窗相同
    assert relatedness(instance, a, r) == pytest.approx(140.0 / 220.0)
    assert relatedness(instance, a, r) == pytest.approx(relatedness(instance, r, a))
    with pytest.raises(ValueError):
        relatedness(instance, a, a)


def test_closeness_picks_cheapest_visiting_order():
    instance = swap_instance()
    a, r = instance.request(2), instance.request(1)
    by_order = closeness_by_order(instance, a, r)
    assert by_order == [140.0, 120.0, 300.0, 280.0, 200.0, 220.0]
    assert closeness(instance, a, r) == 120.0
    # 参照请求不同，结果不对称
    assert closeness(instance, r, a) == 140.0


def test_measure_table():
    instance = swap_instance()
    table = build_measure_table(instance)
    assert table.request_ids == (1, 2)
    assert table.close(2, 1) == 120.0
    assert table.closeness_order[table.index(2), table.index(1)] == 1
    assert table.rel(1, 2) == pytest.approx(140.0 / 220.0)
    frame = table.to_frame()
    assert list(frame.columns) == ["a", "r", "rel", "close", "order"]
    assert len(frame) == 2


def test_infeasible_pairs_use_the_cap():
    # 两个上车时间窗都是[0, 0]，任何顺序都会错过其中一个
    instance = line_instance([0], [(1, 0, 50), (1, 100, 150)], pickup_windows={1: (0, 0), 2: (0, 0)})
    table = build_measure_table(instance)
    assert math.isinf(table.closeness[0, 1])
    assert table.closeness_order[0, 1] == -1
    assert table.close(1, 2) == table.closeness_cap == 1.0


def test_solution_measures():
    instance = swap_instance()
    table = build_measure_table(instance)
    separate = make_solution(instance, [Route(1, (4, 6)), Route(2, (5, 7))])
    assert proximity(instance, separate, 1, table) == pytest.approx(table.rel(1, 2))
    assert interchangeability(instance, separate, 2, table) == 120.0

    together = make_solution(instance, [Route(1, (4, 6, 5, 7)), Route(2)])
    assert proximity(instance, together, 1, table) == table.relatedness_cap
    assert interchangeability(instance, together, 1, table) == table.closeness_cap


def test_dump_csv(tmp_path):
    table = build_measure_table(swap_instance())
    path = table.dump_csv(tmp_path / "measures.csv")
    lines = Path(path).read_text().splitlines()
    assert lines[0] == "a,r,rel,close,order"
    assert len(lines) == 3


@pytest.mark.parametrize("seed", range(20))
def test_closeness_matches_order_enumeration(seed):
    instance = random_line_instance(np.random.default_rng(200 + seed))
    capacity = instance.vehicle(1).capacity
    for a, r in ((instance.request(1), instance.request(2)), (instance.request(2), instance.request(1))):
        expected = math.inf
        for order in request_orders(a, r):
            makespan = brute_force_makespan(instance, order, capacity)
            if makespan is not None:
                expected = min(expected, float(max(makespan - r.direct_time, 0)))
        assert closeness(instance, a, r) == expected
