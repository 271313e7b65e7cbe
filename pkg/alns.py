#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
自适应大邻域搜索(ALNS)模块
负责算子轮盘选择、模拟退火接受准则以及破坏程度的自适应调整
"""

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from measures import MeasureTable, build_measure_table
from model import BalanceSpec, InfeasibleSolutionError, Instance
from operators import DESTROY_OPERATORS, REPAIR_OPERATORS, destroy, repair
from schedule import Solution, check_solution

logger = logging.getLogger(__name__)

ROMAN = ("I", "II", "III", "IV", "V", "VI", "VII", "VIII")


@dataclass(frozen=True)
class AlnsParams:
    """ALNS参数；q_max为None时按请求数取 max(4, ceil(0.4|C|))"""
    t_max: float = 1e4
    gamma: float = 0.999
    refresh: int = 50
    q_min: int = 2
    q_max: Optional[int] = None
    p: float = 0.05
    enlarge: int = 20
    score_increment: float = 1.0
    score_init: float = 1.0
    seed: int = 0
    accept_vs_current: bool = False
    trace_every: int = 100
    destroy_operators: Tuple[str, ...] = DESTROY_OPERATORS
    repair_operators: Tuple[str, ...] = REPAIR_OPERATORS

    def __post_init__(self):
        # YAML 中给出的是列表
        object.__setattr__(self, "destroy_operators", tuple(self.destroy_operators))
        object.__setattr__(self, "repair_operators", tuple(self.repair_operators))

    def resolved(self, request_count: int) -> "AlnsParams":
        """将破坏程度上下界收敛到 1 ≤ q_min ≤ q_max ≤ |C|"""
        q_max = self.q_max if self.q_max is not None else max(4, math.ceil(0.4 * request_count))
        q_max = max(min(q_max, request_count), 1)
        q_min = max(min(self.q_min, q_max), 1)
        return replace(self, q_min=q_min, q_max=q_max)

    def validate(self) -> List[str]:
        errors = []
        if not 0 < self.gamma < 1:
            errors.append("alns.gamma must lie in (0, 1), got {}".format(self.gamma))
        if not 0 <= self.p <= 1:
            errors.append("alns.p must lie in [0, 1], got {}".format(self.p))
        if self.q_min < 1:
            errors.append("alns.q_min must be at least 1, got {}".format(self.q_min))
        if self.q_max is not None and self.q_max < self.q_min:
            errors.append("alns.q_max {} below q_min {}".format(self.q_max, self.q_min))
        if self.score_init <= 0:
            errors.append("alns.score_init must be positive, got {}".format(self.score_init))
        if self.score_increment < 0:
            errors.append("alns.score_increment must not be negative")
        if self.refresh < 0 or self.enlarge < 0:
            errors.append("alns.refresh and alns.enlarge must not be negative")
        if self.trace_every < 1:
            errors.append("alns.trace_every must be at least 1")
        for name, pool, known in (("destroy_operators", self.destroy_operators, DESTROY_OPERATORS),
                                  ("repair_operators", self.repair_operators, REPAIR_OPERATORS)):
            if not pool:
                errors.append("alns.{} must not be empty".format(name))
            unknown = [op for op in pool if op not in known]
            if unknown:
                errors.append("alns.{}: unknown operators {}".format(name, ", ".join(map(str, unknown))))
            if len(set(pool)) != len(pool):
                errors.append("alns.{} lists an operator twice".format(name))
        return errors


class OperatorState(object):
    """一个算子池的得分和成功次数"""

    def __init__(self, names: Sequence[str], score_init: float = 1.0):
        if not names:
            raise ValueError("Operator pool must not be empty")
        if score_init <= 0:
            raise ValueError("Initial score must be positive")
        self.names = tuple(names)
        self.score_init = float(score_init)
        self.scores = np.full(len(self.names), self.score_init)
        self.hits = np.zeros(len(self.names), dtype=int)

    def probabilities(self) -> np.ndarray:
        return self.scores / self.scores.sum()

    def reward(self, index: int, increment: float):
        self.scores[index] += increment

    def reset(self):
        self.scores[:] = self.score_init

    def hit_counts(self) -> Dict[str, int]:
        return {name: int(h) for name, h in zip(self.names, self.hits)}


def select_operator(state: OperatorState, rng: np.random.Generator) -> int:
    """轮盘赌选择：下标i被选中的概率为 score_i / Σ score_j"""
    return int(rng.choice(len(state.names), p=state.probabilities()))


def resize_neighborhood(enlarge: int, w: int, q: int, q_min: int, q_max: int, p: float,
                        rng: np.random.Generator) -> Tuple[int, int]:
    """
    自适应调整破坏程度

    连续超过 enlarge 次未改进时 q 加一；随后以概率 p 将 q 减一。两个分支可在同一次调用中都生效。

    Returns:
        (q', w')
    """
    if not q_min <= q <= q_max:
        raise ValueError("q={} outside [{}, {}]".format(q, q_min, q_max))
    if w > enlarge and q < q_max:
        q += 1
        w = 0
    if rng.random() < p and q > q_min:
        q -= 1
        w = 0
    return q, w


@dataclass
class RunStatistics:
    iterations: int = 0
    improvements: int = 0
    destroy_hits: Dict[str, int] = field(default_factory=dict)
    repair_hits: Dict[str, int] = field(default_factory=dict)
    repair_failures: int = 0
    trace: List[Tuple[int, int, int, int]] = field(default_factory=list)
    runtime: float = 0.0

    def trace_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.trace, columns=["iteration", "best_cost", "current_cost", "q"])

    def hits_frame(self) -> pd.DataFrame:
        """每个算子的成功次数及排名（I为最高），同分按算子顺序"""
        rows = []
        for kind, hits in (("destroy", self.destroy_hits), ("repair", self.repair_hits)):
            ordered = sorted(hits.items(), key=lambda item: -item[1])
            rank_of = {name: ROMAN[i] for i, (name, _) in enumerate(ordered)}
            for name, count in hits.items():
                rows.append({"kind": kind, "operator": name, "hits": count, "rank": rank_of[name]})
        return pd.DataFrame(rows, columns=["kind", "operator", "hits", "rank"])


@dataclass
class AlnsResult:
    best: Solution
    statistics: RunStatistics


def _accept(candidate_cost: int, reference_cost: int, temperature: float, u: float) -> bool:
    exponent = (reference_cost - candidate_cost) / temperature
    return exponent >= 0 or u < math.exp(exponent)


def run_alns(instance: Instance, balance_spec: BalanceSpec, params: AlnsParams, initial_solution: Solution,
             table: Optional[MeasureTable] = None) -> AlnsResult:
    """
    运行ALNS

    Args:
        instance: 问题实例
        balance_spec: 协同模式及平衡阈值
        params: 搜索参数
        initial_solution: 对当前模式可行的初始解
        table: 预计算的度量表，None时现场构建

    Returns:
        AlnsResult: 最优解和运行统计

    Raises:
        InfeasibleSolutionError: 初始解对当前模式不可行
    """
    report = check_solution(instance, initial_solution, balance_spec)
    if report:
        raise InfeasibleSolutionError("Initial solution infeasible for mode {}: {}".format(
            balance_spec.mode.value, "; ".join(report)))

    errors = params.validate()
    if errors:
        raise ValueError("\n".join(errors))

    started = time.perf_counter()
    rng = np.random.default_rng(params.seed)
    destroyers = OperatorState(params.destroy_operators, params.score_init)
    repairers = OperatorState(params.repair_operators, params.score_init)
    stats = RunStatistics()

    current = best = initial_solution
    request_count = len(instance.requests)
    if request_count == 0 or params.t_max <= 1:
        logger.debug("ALNS skipped (%d requests, T_max %s)", request_count, params.t_max)
        stats.destroy_hits = destroyers.hit_counts()
        stats.repair_hits = repairers.hit_counts()
        stats.runtime = time.perf_counter() - started
        return AlnsResult(best, stats)

    params = params.resolved(request_count)
    if table is None:
        table = build_measure_table(instance)

    temperature = params.t_max
    q = params.q_min
    w = 0
    r = 0
    logger.debug("ALNS start: mode %s, seed %d, initial cost %d, q in [%d, %d]",
                 balance_spec.mode.value, params.seed, initial_solution.cost, params.q_min, params.q_max)

    while temperature > 1:
        q, w = resize_neighborhood(params.enlarge, w, q, params.q_min, params.q_max, params.p, rng)
        d = select_operator(destroyers, rng)
        k = select_operator(repairers, rng)
        partial, removed = destroy(destroyers.names[d], instance, current, q, rng, table)
        candidate = repair(repairers.names[k], instance, partial, removed, balance_spec, rng, table)
        u = rng.random()
        if candidate is None:
            stats.repair_failures += 1
            candidate = current

        if candidate.cost >= best.cost:
            w += 1
        reference = current.cost if params.accept_vs_current else best.cost
        if _accept(candidate.cost, reference, temperature, u):
            current = candidate
        if candidate.cost < best.cost:
            best = candidate
            stats.improvements += 1
            destroyers.hits[d] += 1
            repairers.hits[k] += 1
            r += 1
            if r > params.refresh:
                r = 0
                destroyers.reset()
                repairers.reset()
            else:
                destroyers.reward(d, params.score_increment)
                repairers.reward(k, params.score_increment)
            logger.debug("Iteration %d: new best %d (%s + %s, q=%d)", stats.iterations + 1, best.cost,
                         destroyers.names[d], repairers.names[k], q)

        temperature *= params.gamma
        stats.iterations += 1
        if stats.iterations % params.trace_every == 0:
            stats.trace.append((stats.iterations, best.cost, current.cost, q))

    if not stats.trace or stats.trace[-1][0] != stats.iterations:
        stats.trace.append((stats.iterations, best.cost, current.cost, q))
    stats.destroy_hits = destroyers.hit_counts()
    stats.repair_hits = repairers.hit_counts()
    stats.runtime = time.perf_counter() - started
    logger.debug("ALNS done: %d iterations, %d improvements, best cost %d",
                 stats.iterations, stats.improvements, best.cost)
    return AlnsResult(best, stats)
