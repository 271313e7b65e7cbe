#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
精确枚举求解模块
对小规模实例枚举全部请求分配和每条路线的访问顺序，给出最优解作为基准
"""

import itertools
import logging
import time
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Tuple

from model import BalanceSpec, BudgetExceededError, InfeasibleModelError, Instance, compute_thresholds
from schedule import (Route, Schedule, Solution, allowed_company, balance_violations, check_solution,
                      earliest_schedule, make_solution)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnumerationBudget:
    max_requests: int = 5
    max_vehicles: int = 2
    node_cap: int = 2000000
    time_budget: float = 120.0


@dataclass
class OracleResult:
    solution: Solution
    cost: int
    assignments: int
    nodes: int
    runtime: float


class ExactOracle(object):
    """
    精确枚举器

    每个(车辆, 请求子集)的最优路线只与实例有关，缓存后在不同模式和阈值间复用；
    平衡约束只依赖请求分配，因此在分配层面过滤。
    """

    def __init__(self, instance: Instance, budget: Optional[EnumerationBudget] = None):
        self.instance = instance
        self.budget = budget or EnumerationBudget()
        self._routes: Dict[Tuple[int, FrozenSet[int]], Optional[Tuple[int, Tuple[int, ...]]]] = {}
        self._nodes = 0
        self._deadline = None

        if len(instance.requests) > self.budget.max_requests:
            raise BudgetExceededError("Instance has {} requests, oracle budget allows {}".format(
                len(instance.requests), self.budget.max_requests))
        if len(instance.vehicles) > self.budget.max_vehicles:
            raise BudgetExceededError("Instance has {} vehicles, oracle budget allows {}".format(
                len(instance.vehicles), self.budget.max_vehicles))

    def _tick(self):
        self._nodes += 1
        if self._nodes > self.budget.node_cap:
            raise BudgetExceededError("Enumeration exceeded node cap {}".format(self.budget.node_cap))
        if self._nodes % 4096 == 0 and self._deadline is not None and time.perf_counter() > self._deadline:
            raise BudgetExceededError("Enumeration exceeded time budget {}s".format(self.budget.time_budget))

    def best_route(self, vehicle_id: int, request_ids: FrozenSet[int]) -> Optional[Tuple[int, Tuple[int, ...]]]:
        """
        车辆服务给定请求子集的最优路线

        按节点编号字典序深度优先生成先上后下的访问顺序，以最早到达时刻超窗、载客超限和成本上界剪枝；
        成本相同时保留字典序最小的顺序。

        Returns:
            (成本, 访问序列)，不可行时返回None
        """
        key = (vehicle_id, request_ids)
        if key in self._routes:
            return self._routes[key]

        instance = self.instance
        vehicle = instance.vehicle(vehicle_id)
        c = instance.cost_rows
        t = instance.travel_rows
        e, l, s = instance.earliest, instance.latest, instance.service
        requests = [instance.request(r) for r in sorted(request_ids)]
        best: List = [None]

        def extend(last: int, clock: int, load: int, cost: int, visits: Tuple[int, ...],
                   waiting: Tuple, onboard: Tuple):
            self._tick()
            if best[0] is not None and cost > best[0][0]:
                return
            if not waiting and not onboard:
                total = cost + c[last][vehicle.end_depot]
                if best[0] is not None and total >= best[0][0]:
                    return
                if isinstance(earliest_schedule(instance, Route(vehicle_id, visits)), Schedule):
                    best[0] = (total, visits)
                return
            options = [(r.origin, r) for r in waiting] + [(r.destination, r) for r in onboard]
            for node, request in sorted(options, key=lambda item: item[0]):
                arrival = max(e[node], clock + s[last] + t[last][node])
                if arrival > l[node]:
                    continue
                if node == request.origin:
                    if load + request.passengers > vehicle.capacity:
                        continue
                    extend(node, arrival, load + request.passengers, cost + c[last][node], visits + (node,),
                           tuple(r for r in waiting if r is not request), onboard + (request,))
                else:
                    extend(node, arrival, load - request.passengers, cost + c[last][node], visits + (node,),
                           waiting, tuple(r for r in onboard if r is not request))

        extend(vehicle.start_depot, e[vehicle.start_depot], 0, 0, (), tuple(requests), ())
        self._routes[key] = best[0]
        return best[0]

    def solve(self, balance_spec: BalanceSpec) -> OracleResult:
        """
        求当前模式下的最优解

        Raises:
            BudgetExceededError: 超出节点数或时间预算
            InfeasibleModelError: 穷举证明当前模式无可行解
        """
        started = time.perf_counter()
        self._deadline = started + self.budget.time_budget
        instance = self.instance
        spec = balance_spec.for_instance(instance)
        thresholds = compute_thresholds(instance, spec)
        requests = list(instance.requests)
        choices = []
        for request in requests:
            allowed = [v.id for v in instance.vehicles if allowed_company(instance, request, v.owner, spec.mode)]
            if not allowed:
                raise InfeasibleModelError("Request {} cannot be served by any vehicle in mode {}".format(
                    request.id, spec.mode.value))
            choices.append(allowed)

        best = None
        evaluated = 0
        for combination in itertools.product(*choices):
            assignment = {request.id: vehicle_id for request, vehicle_id in zip(requests, combination)}
            if balance_violations(instance, assignment, spec, thresholds):
                continue
            evaluated += 1
            total = 0
            visits = []
            for vehicle in instance.vehicles:
                subset = frozenset(r for r, v in assignment.items() if v == vehicle.id)
                found = self.best_route(vehicle.id, subset)
                if found is None:
                    break
                total += found[0]
                visits.append(found[1])
            else:
                key = (total, tuple(visits))
                if best is None or key < best:
                    best = key

        runtime = time.perf_counter() - started
        if best is None:
            raise InfeasibleModelError("No feasible {} solution exists ({} assignments enumerated)".format(
                spec.mode.value, evaluated))

        solution = make_solution(instance, [Route(v.id, visits) for v, visits in zip(instance.vehicles, best[1])])
        report = check_solution(instance, solution, spec)
        if report:
            raise InfeasibleModelError("Enumerated optimum failed the feasibility check: {}".format("; ".join(report)))
        logger.debug("Oracle %s optimum %d (%d assignments, %d nodes, %.3fs)",
                     spec.mode.value, solution.cost, evaluated, self._nodes, runtime)
        return OracleResult(solution, solution.cost, evaluated, self._nodes, runtime)


def solve_exact(instance: Instance, balance_spec: BalanceSpec,
                budget: Optional[EnumerationBudget] = None) -> OracleResult:
    return ExactOracle(instance, budget).solve(balance_spec)
