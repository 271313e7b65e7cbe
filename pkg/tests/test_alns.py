#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
测试ALNS主循环、算子选择和破坏程度调整
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# 添加项目根目录到Python路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from alns import AlnsParams, OperatorState, RunStatistics, resize_neighborhood, run_alns, select_operator
from instance_factory import swap_instance
from model import BalanceSpec, InfeasibleSolutionError, Mode
from schedule import Route, make_solution

# 温度 10 -> 5 -> 2.5 -> 1.25 -> 0.625，共4次迭代
QUICK = AlnsParams(t_max=10.0, gamma=0.5, seed=11)


def _nc_solution(instance):
    return make_solution(instance, [Route(1, (4, 6)), Route(2, (5, 7))])


def test_params_resolution():
    resolved = AlnsParams().resolved(20)
    assert (resolved.q_min, resolved.q_max) == (2, 8)
    assert AlnsParams().resolved(2).q_max == 2
    small = AlnsParams(q_min=3).resolved(1)
    assert (small.q_min, small.q_max) == (1, 1)
    assert AlnsParams(gamma=1.0).validate() == ["alns.gamma must lie in (0, 1), got 1.0"]


def test_roulette_selection_follows_scores():
    state = OperatorState(("a", "b"), score_init=1.0)
    state.reward(1, 99.0)
    assert state.probabilities() == pytest.approx([0.01, 0.99])
    rng = np.random.default_rng(0)
    picks = [select_operator(state, rng) for _ in range(200)]
    assert picks.count(1) > 150
    state.reset()
    assert list(state.scores) == [1.0, 1.0]


def test_roulette_frequencies_with_equal_scores():
    state = OperatorState(tuple("abcdef"))
    rng = np.random.default_rng(2024)
    draws = 60000
    counts = np.bincount([select_operator(state, rng) for _ in range(draws)], minlength=6)
    expected = draws / 6
    chi_square = float(((counts - expected) ** 2 / expected).sum())
    # 5 个自由度、显著性水平 0.01 的临界值
    assert chi_square < 15.086


def test_roulette_frequencies_follow_score_ratio():
    state = OperatorState(("a", "b"))
    state.reward(0, 2.0)
    rng = np.random.default_rng(7)
    picks = np.array([select_operator(state, rng) for _ in range(40000)])
    assert np.mean(picks == 0) == pytest.approx(0.75, abs=0.01)


def test_neighborhood_resizing():
    rng = np.random.default_rng(0)
    # p=0 时只可能增大
    assert resize_neighborhood(enlarge=5, w=6, q=2, q_min=2, q_max=4, p=0.0, rng=rng) == (3, 0)
    assert resize_neighborhood(enlarge=5, w=3, q=2, q_min=2, q_max=4, p=0.0, rng=rng) == (2, 3)
    assert resize_neighborhood(enlarge=5, w=6, q=4, q_min=2, q_max=4, p=0.0, rng=rng) == (4, 6)
    # p=1 时先增大再减小
    assert resize_neighborhood(enlarge=5, w=6, q=2, q_min=2, q_max=4, p=1.0, rng=rng) == (2, 0)
    assert resize_neighborhood(enlarge=5, w=1, q=3, q_min=2, q_max=4, p=1.0, rng=rng) == (2, 0)
    with pytest.raises(ValueError):
        resize_neighborhood(enlarge=5, w=0, q=5, q_min=2, q_max=4, p=0.0, rng=rng)


def test_alns_finds_the_swap():
    instance = swap_instance()
    result = run_alns(instance, BalanceSpec(Mode.UC), QUICK, _nc_solution(instance))
    assert result.best.cost == 120
    stats = result.statistics
    assert stats.iterations == 4
    assert stats.improvements == 1
    assert sum(stats.destroy_hits.values()) == 1
    assert sum(stats.repair_hits.values()) == 1
    assert stats.trace[-1] == (4, 120, 120, 2)


def test_alns_respects_time_balance():
    instance = swap_instance()
    spec = BalanceSpec(Mode.T, alpha_t=0.5)
    result = run_alns(instance, spec, QUICK, _nc_solution(instance))
    assert result.best.cost == 480
    assert result.best.assignment(instance) == {1: 1, 2: 2}
    assert result.statistics.improvements == 0
    # 交换违反平衡约束，修复退回到不协同解而不是失败
    assert result.statistics.repair_failures == 0


def test_alns_is_deterministic_per_seed():
    instance = swap_instance()
    first = run_alns(instance, BalanceSpec(Mode.UC), QUICK, _nc_solution(instance)).statistics
    second = run_alns(instance, BalanceSpec(Mode.UC), QUICK, _nc_solution(instance)).statistics
    assert first.destroy_hits == second.destroy_hits
    assert first.repair_hits == second.repair_hits
    assert first.trace == second.trace


def test_no_iterations_when_temperature_is_low():
    instance = swap_instance()
    start = _nc_solution(instance)
    result = run_alns(instance, BalanceSpec(Mode.UC), AlnsParams(t_max=1.0), start)
    assert result.best is start
    assert result.statistics.iterations == 0


def test_infeasible_start_is_rejected():
    instance = swap_instance()
    swap = make_solution(instance, [Route(1, (5, 7)), Route(2, (4, 6))])
    with pytest.raises(InfeasibleSolutionError):
        run_alns(instance, BalanceSpec(Mode.NC), QUICK, swap)


def test_hits_frame_ranks():
    stats = RunStatistics(destroy_hits={"random": 1, "worst": 3, "related": 1}, repair_hits={"best": 0})
    frame = stats.hits_frame()
    destroy = frame[frame["kind"] == "destroy"].set_index("operator")
    assert destroy.loc["worst", "rank"] == "I"
    assert destroy.loc["random", "rank"] == "II"
    assert destroy.loc["related", "rank"] == "III"
    assert list(frame[frame["kind"] == "repair"]["rank"]) == ["I"]


def test_alns_uses_only_configured_operators():
    instance = swap_instance()
    params = AlnsParams(t_max=10.0, gamma=0.5, seed=11, destroy_operators=["random"], repair_operators=("best",))
    assert params.destroy_operators == ("random",)
    result = run_alns(instance, BalanceSpec(Mode.UC), params, _nc_solution(instance))
    assert result.best.cost == 120
    assert result.statistics.destroy_hits == {"random": 1}
    assert result.statistics.repair_hits == {"best": 1}
    assert AlnsParams(repair_operators=("best", "best")).validate() == [
        "alns.repair_operators lists an operator twice"]
