#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
测试小规模实例的精确枚举
"""

import sys
from pathlib import Path

import pytest

# 添加项目根目录到Python路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from exact_oracle import EnumerationBudget, ExactOracle, solve_exact
from instance_factory import swap_instance
from model import BalanceSpec, BudgetExceededError, InfeasibleModelError, Lock, LockKind, Mode


@pytest.mark.parametrize("spec, expected", [
    (BalanceSpec(Mode.NC), 480),
    (BalanceSpec(Mode.UC), 120),
    (BalanceSpec(Mode.T, alpha_t=0.5), 480),
    (BalanceSpec(Mode.T, alpha_t=1.0), 120),
    (BalanceSpec(Mode.C, alpha_c=0.0), 120),
    (BalanceSpec(Mode.TC, alpha_t=0.5, alpha_c=1.0), 480),
])
def test_optimum_per_mode(spec, expected):
    result = solve_exact(swap_instance(), spec)
    assert result.cost == expected
    assert result.solution.cost == expected


def test_modes_are_ordered():
    oracle = ExactOracle(swap_instance())
    uc = oracle.solve(BalanceSpec(Mode.UC)).cost
    tc = oracle.solve(BalanceSpec(Mode.TC, alpha_t=1.0, alpha_c=1.0)).cost
    nc = oracle.solve(BalanceSpec(Mode.NC)).cost
    assert uc <= tc <= nc


def test_offsets_change_the_optimum():
    # 公司2带着+10的时间记忆，交换后 |20+10| > 20；改由车辆1服务两个请求
    spec = BalanceSpec(Mode.T, alpha_t=1.0, time_offsets={2: 10})
    instance = swap_instance()
    result = solve_exact(instance, spec)
    assert result.cost == 280
    assert result.solution.assignment(instance) == {1: 1, 2: 1}


def test_best_route_is_cached_and_lexicographic():
    instance = swap_instance()
    oracle = ExactOracle(instance)
    first = oracle.best_route(1, frozenset({1, 2}))
    assert first[0] == 280
    # 两个顺序成本都是280，保留节点序列字典序较小者
    assert first[1] == (4, 6, 5, 7)
    assert oracle.best_route(1, frozenset({1, 2})) is first
    assert oracle.best_route(2, frozenset()) == (0, ())


def test_budget_is_enforced():
    with pytest.raises(BudgetExceededError):
        ExactOracle(swap_instance(), EnumerationBudget(max_requests=1))
    oracle = ExactOracle(swap_instance(), EnumerationBudget(node_cap=3))
    with pytest.raises(BudgetExceededError):
        oracle.solve(BalanceSpec(Mode.UC))


def test_infeasible_modes_are_reported():
    spec = BalanceSpec(Mode.T, alpha_t=0.0, time_offsets={1: 5})
    with pytest.raises(InfeasibleModelError):
        solve_exact(swap_instance(), spec)
    locked = swap_instance(locks={1: Lock(LockKind.DENYLIST, (1, 2))})
    with pytest.raises(InfeasibleModelError):
        solve_exact(locked, BalanceSpec(Mode.UC))
