#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
测试求解执行器的参照解和后端选择
"""

import logging
import sys
from pathlib import Path

import pytest

# 添加项目根目录到Python路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

import config
from alns import AlnsParams
from instance_factory import swap_instance
from model import Lock, LockKind, Mode
from solver import COMPONENT_LOGGERS, SolverExecutor, percent


@pytest.fixture
def executor():
    solver_config = config.load_solver_config()
    solver_config.alns = AlnsParams(t_max=10.0, gamma=0.5)
    return SolverExecutor(solver_config, name="test")


def test_alns_outcome_has_both_references(executor):
    instance = swap_instance()
    outcome = executor.solve(instance, executor.balance_spec(Mode.UC), "alns", seed=0)
    assert outcome.cost == 120
    assert outcome.nc_cost == 480
    assert outcome.optimum == 120
    assert outcome.gap == 0.0
    assert percent(outcome.sav) == "75.0000"


def test_offsets_force_a_new_start(executor):
    instance = swap_instance()
    # 偏移量使不协同解违反时间平衡，需要重新构造初始解
    spec = executor.balance_spec(Mode.T, alpha_t=0.0, time_offsets={1: 20, 2: -20})
    outcome = executor.solve(instance, spec, "alns", seed=0)
    assert outcome.cost == 120
    assert outcome.solution.time_balance == {1: -20, 2: 20}


def test_collaboration_without_nc_reference(executor):
    # 公司1拒绝服务自己的请求1，不协同模式无可行解
    instance = swap_instance(locks={1: Lock(LockKind.DENYLIST, (1,))})
    for backend in ("oracle", "alns"):
        outcome = executor.solve(instance, executor.balance_spec(Mode.UC), backend, seed=0)
        assert outcome.cost == 120
        assert outcome.solution.assignment(instance)[1] == 2
        assert outcome.nc_cost is None
        assert outcome.sav is None


def test_unknown_backend(executor):
    with pytest.raises(ValueError):
        executor.solve(swap_instance(), executor.balance_spec(Mode.UC), "gurobi")


def test_debug_level_reaches_algorithm_loggers(capsys):
    solver_config = config.load_solver_config()
    solver_config.alns = AlnsParams(t_max=10.0, gamma=0.5)
    solver_config.logging.level = "DEBUG"
    executor = SolverExecutor(solver_config, name="debug_trace")
    try:
        outcome = executor.solve(swap_instance(), executor.balance_spec(Mode.UC), "alns", seed=0)
        assert outcome.cost == 120
        err = capsys.readouterr().err
        assert "alns - DEBUG - ALNS start: mode UC" in err
        assert "new best 120" in err
        assert logging.getLogger("operators").level == logging.DEBUG
    finally:
        for name in COMPONENT_LOGGERS + ("solver_debug_trace",):
            logging.getLogger(name).handlers = []
            logging.getLogger(name).setLevel(logging.NOTSET)


def test_invalid_balance_settings(executor):
    spec = executor.balance_spec(Mode.T, alpha_t=-0.1, time_offsets={9: 5})
    with pytest.raises(ValueError) as info:
        executor.solve(swap_instance(), spec, "oracle")
    message = str(info.value)
    assert message.startswith("Invalid balance settings:")
    assert "- Offset given for unknown company 9" in message
    assert "Balance percentages must be non-negative" in message
