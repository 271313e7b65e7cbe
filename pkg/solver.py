#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
求解执行器模块
负责按协同模式调用ALNS或精确枚举后端，并计算相对不协同解的节约率和最优性差距
"""

import logging
import time
from dataclasses import dataclass, replace
from datetime import datetime
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from alns import RunStatistics, run_alns
from config import SolverConfig
from exact_oracle import ExactOracle
from measures import MeasureTable, build_measure_table
from model import (BalanceSpec, BudgetExceededError, InfeasibleModelError, Instance, InstanceFormatError, Mode,
                   validate_balance_spec, validate_instance)
from operators import construct_solution
from schedule import Solution, check_solution

BACKENDS = ("alns", "oracle")
# 各算法模块 logging.getLogger(__name__) 的名称
COMPONENT_LOGGERS = ("alns", "operators", "measures", "exact_oracle", "lp_generator", "instance_generator")


@dataclass
class SolveOutcome:
    """一次求解的结果"""
    mode: Mode
    backend: str
    seed: int
    solution: Solution
    nc_cost: Optional[int] = None
    optimum: Optional[int] = None
    statistics: Optional[RunStatistics] = None
    runtime: float = 0.0

    @property
    def cost(self) -> int:
        return self.solution.cost

    @property
    def sav(self) -> Optional[float]:
        """相对不协同解的节约率（百分比）"""
        if self.nc_cost is None or self.nc_cost == 0:
            return None
        return 100.0 * (self.nc_cost - self.cost) / self.nc_cost

    @property
    def gap(self) -> Optional[float]:
        """相对精确最优解的差距（百分比），无参照时为None"""
        if self.optimum is None:
            return None
        if self.optimum == 0:
            return 0.0 if self.cost == 0 else None
        return 100.0 * (self.cost - self.optimum) / self.optimum


def percent(value: Optional[float]) -> str:
    return "" if value is None else "{:.4f}".format(value)


class SolverExecutor:
    """求解执行器"""

    def __init__(self, config: SolverConfig, name: str = "cdarp"):
        """
        初始化求解执行器

        Args:
            config: 求解器配置对象
            name: 日志记录器名称后缀
        """
        self.config = config
        self.name = name
        self.logger = self._setup_logger()

        # 按实例缓存度量表、精确枚举器和不协同解
        self._tables: Dict[Instance, MeasureTable] = {}
        self._oracles: Dict[Instance, Optional[ExactOracle]] = {}
        self._nc: Dict[Tuple[Instance, str, int], Tuple[Solution, Optional[RunStatistics]]] = {}

    def _setup_logger(self) -> logging.Logger:
        """设置日志记录器"""
        logger = logging.getLogger(f"solver_{self.name}")
        level = getattr(logging, self.config.logging.level, logging.INFO)
        logger.setLevel(level)

        # 避免重复添加handler
        if not logger.handlers:
            formatter = logging.Formatter(self.config.logging.format)

            console_handler = logging.StreamHandler()
            console_handler.setLevel(level)
            console_handler.setFormatter(formatter)
            logger.addHandler(console_handler)

            if self.config.logging.log_dir:
                log_dir = Path(self.config.logging.log_dir)
                log_dir.mkdir(parents=True, exist_ok=True)
                log_file = log_dir / f"solver_{datetime.now().strftime('%Y%m%d_%H%M%S')}.log"
                file_handler = logging.FileHandler(log_file, encoding='utf-8')
                file_handler.setLevel(level)
                file_handler.setFormatter(formatter)
                logger.addHandler(file_handler)

        # 算法模块的日志输出到最近创建的执行器的handler
        for component in COMPONENT_LOGGERS:
            component_logger = logging.getLogger(component)
            component_logger.setLevel(level)
            component_logger.handlers = list(logger.handlers)

        return logger

    def balance_spec(self, mode, alpha_t: float = 0.0, alpha_c: float = 0.0,
                     time_offsets: Optional[Dict[int, int]] = None,
                     customer_offsets: Optional[Dict[int, int]] = None) -> BalanceSpec:
        return BalanceSpec(
            mode=Mode.parse(mode), alpha_t=alpha_t, alpha_c=alpha_c,
            time_offsets=dict(time_offsets or {}), customer_offsets=dict(customer_offsets or {}),
            customer_rounding=self.config.customer_rounding,
        )

    def prepare(self, instance: Instance) -> MeasureTable:
        """
        校验实例并构建度量表

        Raises:
            InstanceFormatError: 实例不满足不变量
        """
        key = instance
        if key not in self._tables:
            report = validate_instance(instance)
            if report:
                raise InstanceFormatError("Invalid instance:\n" + "\n".join("- {}".format(r) for r in report))
            self._tables[key] = build_measure_table(instance, self.config.measures)
        return self._tables[key]

    def oracle_for(self, instance: Instance) -> Optional[ExactOracle]:
        """实例超出枚举预算时返回None"""
        key = instance
        if key not in self._oracles:
            try:
                self._oracles[key] = ExactOracle(instance, self.config.oracle)
            except BudgetExceededError as e:
                self.logger.debug(f"Oracle unavailable: {e}")
                self._oracles[key] = None
        return self._oracles[key]

    def _alns(self, instance: Instance, spec: BalanceSpec, seed: int, initial: Solution):
        params = replace(self.config.alns, seed=seed, trace_every=self.config.benchmark.trace_every)
        return run_alns(instance, spec, params, initial, self.prepare(instance))

    def _construct(self, instance: Instance, spec: BalanceSpec, seed: int) -> Solution:
        rng = np.random.default_rng([seed, 1])
        return construct_solution(instance, spec, rng, self.config.benchmark.construction_attempts)

    def _nc_solution(self, instance: Instance, backend: str, seed: int) -> Tuple[Solution, Optional[RunStatistics]]:
        key = (instance, backend, seed)
        if key not in self._nc:
            spec = self.balance_spec(Mode.NC)
            if backend == "oracle":
                self._nc[key] = (self._require_oracle(instance).solve(spec).solution, None)
            else:
                result = self._alns(instance, spec, seed, self._construct(instance, spec, seed))
                self._nc[key] = (result.best, result.statistics)
        return self._nc[key]

    def _require_oracle(self, instance: Instance) -> ExactOracle:
        oracle = self.oracle_for(instance)
        if oracle is None:
            raise BudgetExceededError("Instance exceeds the oracle budget ({} requests, {} vehicles)".format(
                len(instance.requests), len(instance.vehicles)))
        return oracle

    def solve(self, instance: Instance, spec: BalanceSpec, backend: str = "alns", seed: int = 0,
              reference: bool = True) -> SolveOutcome:
        """
        在给定模式下求解实例

        Args:
            instance: 实例
            spec: 协同模式、阈值和偏移量
            backend: alns 或 oracle
            seed: 随机种子
            reference: 是否计算不协同解作为节约率参照，并在预算内计算精确最优解作为GAP参照

        Returns:
            SolveOutcome: 求解结果

        Raises:
            ValueError: 未知后端，或平衡配置有误（负的 α、未知公司的偏移量）
        """
        if backend not in BACKENDS:
            raise ValueError("Unknown backend: {} (expected alns or oracle)".format(backend))
        self.prepare(instance)
        errors = validate_balance_spec(instance, spec)
        if errors:
            raise ValueError("Invalid balance settings:\n" + "\n".join("- {}".format(e) for e in errors))
        started = time.perf_counter()
        statistics = None

        if backend == "oracle":
            solution = self._require_oracle(instance).solve(spec).solution
        elif spec.mode == Mode.NC:
            solution, statistics = self._nc_solution(instance, backend, seed)
        else:
            # 从不协同最优解出发；记忆偏移量或锁定可能使其不可用
            try:
                start = self._nc_solution(instance, backend, seed)[0]
            except InfeasibleModelError:
                start = None
            if start is None or check_solution(instance, start, spec):
                self.logger.debug(f"No usable NC start for mode {spec.mode.value}, constructing a new start")
                start = self._construct(instance, spec, seed)
            result = self._alns(instance, spec, seed, start)
            solution, statistics = result.best, result.statistics

        outcome = SolveOutcome(spec.mode, backend, seed, solution, statistics=statistics)
        if reference:
            try:
                outcome.nc_cost = self._nc_solution(instance, backend, seed)[0].cost
            except InfeasibleModelError as e:
                self.logger.warning(f"No NC reference: {e}")
            if backend == "oracle":
                outcome.optimum = solution.cost
            elif self.config.benchmark.gap_reference and self.oracle_for(instance) is not None:
                try:
                    outcome.optimum = self.oracle_for(instance).solve(spec).cost
                except BudgetExceededError as e:
                    self.logger.warning(f"No GAP reference: {e}")
        outcome.runtime = time.perf_counter() - started
        return outcome
