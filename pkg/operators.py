#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
ALNS破坏和修复算子模块
包含六个破坏算子、五个修复算子以及初始解构造
"""

import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from measures import MeasureTable, build_measure_table, interchangeability, proximity
from model import BalanceSpec, InfeasibleModelError, Instance, Mode, compute_thresholds
from schedule import (Infeasible, Insertion, Route, Solution, allowed_company, balance_excess, check_solution,
                      earliest_schedule, make_solution, route_cost, try_insert)

logger = logging.getLogger(__name__)

DESTROY_OPERATORS = ("random", "worst", "related", "proximity", "closeness", "interchangeability")
REPAIR_OPERATORS = ("best", "2-regret", "3-regret", "4-regret", "closeness")


def _draw(rng: np.random.Generator, weights: Sequence[float]) -> int:
    """按权重抽取下标；权重全为0时均匀抽取"""
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    if not np.isfinite(total) or total <= 0:
        return int(rng.integers(len(weights)))
    return int(rng.choice(len(weights), p=weights / total))


def _draw_without_replacement(rng: np.random.Generator, items: List[int],
                              weights: List[float], count: int) -> List[int]:
    items = list(items)
    weights = list(weights)
    chosen = []
    for _ in range(count):
        idx = _draw(rng, weights)
        chosen.append(items.pop(idx))
        weights.pop(idx)
    return chosen


def _strip(instance: Instance, solution: Solution, removed: Sequence[int]) -> Solution:
    nodes = set()
    for request_id in removed:
        request = instance.request(request_id)
        nodes.update((request.origin, request.destination))
    routes = [Route(route.vehicle_id, tuple(n for n in route.visits if n not in nodes)) for route in solution.routes]
    return make_solution(instance, routes)


def _random_removal(instance, solution, served, q, rng, table):
    picked = rng.choice(len(served), size=q, replace=False)
    return [served[int(i)] for i in picked]


def _worst_removal(instance, solution, served, q, rng, table):
    # 每移除一个请求后重新计算边际成本
    assignment = solution.assignment(instance)
    routes = {route.vehicle_id: route for route in solution.routes}
    remaining = list(served)
    removed = []
    for _ in range(q):
        weights = []
        for request_id in remaining:
            route = routes[assignment[request_id]]
            shorter = route.without(instance.request(request_id))
            marginal = route_cost(instance, route) - route_cost(instance, shorter)
            weights.append(float(marginal) ** 2)
        request_id = remaining.pop(_draw(rng, weights))
        vehicle_id = assignment[request_id]
        routes[vehicle_id] = routes[vehicle_id].without(instance.request(request_id))
        removed.append(request_id)
    return removed


def _seeded_removal(measure: Callable[[MeasureTable, int, int], float]):
    """先均匀抽取参照请求r，再按 measure(a, r)^2 抽取其余 q-1 个请求"""
    def removal(instance, solution, served, q, rng, table):
        seed = served[int(rng.integers(len(served)))]
        others = [a for a in served if a != seed]
        weights = [measure(table, a, seed) ** 2 for a in others]
        return [seed] + _draw_without_replacement(rng, others, weights, q - 1)
    return removal


def _solution_measure_removal(measure):
    """按当前解上的度量平方为所有已服务请求加权，抽取q个"""
    def removal(instance, solution, served, q, rng, table):
        weights = [measure(instance, solution, a, table) ** 2 for a in served]
        return _draw_without_replacement(rng, served, weights, q)
    return removal


_DESTROYERS = {
    "random": _random_removal,
    "worst": _worst_removal,
    "related": _seeded_removal(lambda table, a, r: table.rel(a, r)),
    "closeness": _seeded_removal(lambda table, a, r: table.close(a, r)),
    "proximity": _solution_measure_removal(proximity),
    "interchangeability": _solution_measure_removal(interchangeability),
}


def destroy(op: str, instance: Instance, solution: Solution, q: int, rng: np.random.Generator,
            table: Optional[MeasureTable] = None) -> Tuple[Solution, List[int]]:
    """
    破坏当前解

    Args:
        op: 破坏算子名称
        q: 移除的请求数

    Returns:
        (部分解, 被移除请求id列表)；部分解不检查平衡约束
    """
    if op not in _DESTROYERS:
        raise ValueError("Unknown destroy operator: {}".format(op))
    served = solution.served_requests(instance)
    if not 1 <= q <= len(served):
        raise ValueError("Destruction degree {} outside [1, {}]".format(q, len(served)))
    if table is None and op in ("related", "closeness", "proximity", "interchangeability"):
        table = build_measure_table(instance)
    removed = _DESTROYERS[op](instance, solution, served, q, rng, table)
    return _strip(instance, solution, removed), [int(r) for r in removed]


class _InsertionCache(object):
    """缓存每个(请求, 车辆)的最优插入，路线变化时失效"""

    def __init__(self, instance: Instance, routes: Dict[int, Route], mode: Mode):
        self.instance = instance
        self.routes = routes
        self.mode = mode
        self._cache: Dict[Tuple[int, int], Optional[Insertion]] = {}

    def options(self, request_id: int) -> List[Insertion]:
        request = self.instance.request(request_id)
        found = []
        for vehicle in self.instance.vehicles:
            if not allowed_company(self.instance, request, vehicle.owner, self.mode):
                continue
            key = (request_id, vehicle.id)
            if key not in self._cache:
                self._cache[key] = try_insert(self.instance, self.routes[vehicle.id], request)
            if self._cache[key] is not None:
                found.append(self._cache[key])
        found.sort(key=lambda ins: (ins.delta, ins.vehicle_id))
        return found

    def apply(self, insertion: Insertion):
        self.routes[insertion.vehicle_id] = Route(insertion.vehicle_id, insertion.visits)
        for key in [k for k in self._cache if k[1] == insertion.vehicle_id]:
            del self._cache[key]


def _regret_weights(cache: _InsertionCache, pending: List[int], k: int, penalty: float) -> Optional[List[float]]:
    weights = []
    for request_id in pending:
        deltas = [ins.delta for ins in cache.options(request_id)]
        if not deltas:
            return None
        deltas += [penalty] * (k - len(deltas))
        weights.append(float(sum(deltas[h] - deltas[0] for h in range(1, k))))
    return weights


def _closeness_weights(instance: Instance, routes: Dict[int, Route], pending: List[int],
                       table: MeasureTable) -> List[float]:
    placed = make_solution(instance, routes.values()).served_requests(instance)
    weights = []
    for request_id in pending:
        nearest = min((table.close(request_id, c) for c in placed), default=table.closeness_cap)
        weights.append(1.0 / max(nearest, 1.0))
    return weights


def _insert_in_order(instance: Instance, routes: Dict[int, Route], assignment: Dict[int, int],
                     order: Sequence[int], spec: BalanceSpec, thresholds) -> bool:
    """按给定顺序逐个插入：先取平衡超出量最小的车辆，再取成本增量最小者"""
    cache = _InsertionCache(instance, routes, spec.mode)
    for request_id in order:
        options = cache.options(request_id)
        if not options:
            return False

        def key(insertion):
            trial = dict(assignment)
            trial[request_id] = insertion.vehicle_id
            return (balance_excess(instance, trial, spec, thresholds), insertion.delta, insertion.vehicle_id)

        choice = min(options, key=key)
        cache.apply(choice)
        assignment[request_id] = choice.vehicle_id
    return True


def _rebalance(instance: Instance, routes: Dict[int, Route], assignment: Dict[int, int],
               movable: Sequence[int], spec: BalanceSpec, thresholds) -> bool:
    """
    逐次把一个请求移到另一家公司的车辆上，直到满足平衡约束

    每步只接受使平衡超出量严格下降的移动，其中取成本变化最小者。

    Returns:
        是否满足平衡约束；没有可用移动时返回False
    """
    excess = balance_excess(instance, assignment, spec, thresholds)
    while excess > 0:
        best = None
        for request_id in movable:
            request = instance.request(request_id)
            source = assignment[request_id]
            shorter = routes[source].without(request)
            if isinstance(earliest_schedule(instance, shorter), Infeasible):
                continue
            saving = route_cost(instance, routes[source]) - route_cost(instance, shorter)
            source_owner = instance.vehicle(source).owner
            for vehicle in instance.vehicles:
                if vehicle.owner == source_owner or not allowed_company(instance, request, vehicle.owner, spec.mode):
                    continue
                trial = dict(assignment)
                trial[request_id] = vehicle.id
                trial_excess = balance_excess(instance, trial, spec, thresholds)
                if trial_excess >= excess:
                    continue
                insertion = try_insert(instance, routes[vehicle.id], request)
                if insertion is None:
                    continue
                key = (insertion.delta - saving, trial_excess, request_id, vehicle.id)
                if best is None or key < best[0]:
                    best = (key, request_id, source, shorter, insertion)
        if best is None:
            return False
        key, request_id, source, shorter, insertion = best
        routes[source] = shorter
        routes[insertion.vehicle_id] = Route(insertion.vehicle_id, insertion.visits)
        assignment[request_id] = insertion.vehicle_id
        excess = key[1]
    return True


def _balanced_completion(instance: Instance, base: Dict[int, Route], order: Sequence[int],
                         spec: BalanceSpec) -> Optional[Solution]:
    """最小成本插入违反平衡约束时的补救：平衡优先地重新插入，再移动这些请求"""
    thresholds = compute_thresholds(instance, spec)
    routes = dict(base)
    assignment = make_solution(instance, routes.values()).assignment(instance)
    if not _insert_in_order(instance, routes, assignment, order, spec, thresholds):
        return None
    if not _rebalance(instance, routes, assignment, order, spec, thresholds):
        return None
    solution = make_solution(instance, routes.values())
    if check_solution(instance, solution, spec):
        return None
    return solution


def repair(op: str, instance: Instance, partial: Solution, removed: Sequence[int],
           balance_spec: BalanceSpec, rng: np.random.Generator,
           table: Optional[MeasureTable] = None) -> Optional[Solution]:
    """
    修复部分解

    逐个按算子的概率规则选取待插入请求，并插入到所有路线中成本增量最小的可行位置。
    重建的解违反平衡约束时，按同一插入顺序改为平衡优先的插入，
    再逐次移动被插入的请求，直到满足 S̃_m、Ũ_m。

    Returns:
        满足当前模式全部约束的完整解，无法完成时返回None
    """
    if op not in REPAIR_OPERATORS:
        raise ValueError("Unknown repair operator: {}".format(op))
    if not removed:
        raise ValueError("Repair needs at least one removed request")
    if op == "closeness" and table is None:
        table = build_measure_table(instance)

    base = {route.vehicle_id: route for route in partial.routes}
    routes = dict(base)
    cache = _InsertionCache(instance, routes, balance_spec.mode)
    pending = list(removed)
    order = []
    penalty = 2.0 * (partial.cost + instance.horizon)

    while pending:
        if op == "best":
            idx = int(rng.integers(len(pending)))
        elif op == "closeness":
            idx = _draw(rng, _closeness_weights(instance, routes, pending, table))
        else:
            weights = _regret_weights(cache, pending, int(op[0]), penalty)
            if weights is None:
                return None
            idx = _draw(rng, weights)
        request_id = pending.pop(idx)
        options = cache.options(request_id)
        if not options:
            return None
        cache.apply(options[0])
        order.append(request_id)

    solution = make_solution(instance, routes.values())
    if not check_solution(instance, solution, balance_spec):
        return solution
    if balance_spec.mode.bounds_time or balance_spec.mode.bounds_customers:
        return _balanced_completion(instance, base, order, balance_spec)
    return None


def construction_key(request):
    """构造顺序：最早可上车时刻，其次请求id"""
    return (max(request.pickup_window[0],
                request.drop_window[0] - request.direct_time - request.service_pickup), request.id)


def construct_solution(instance: Instance, balance_spec: BalanceSpec, rng: np.random.Generator,
                       attempts: int = 50) -> Solution:
    """
    构造初始可行解

    第一次尝试按时间顺序将请求以最小成本插入所属公司车辆（不协同解），
    之后打乱顺序并随机选择可行车辆，直到解满足当前模式的全部约束。
    完整的解只违反平衡约束时，按同一顺序做平衡优先的插入作补救。
    """
    requests = list(instance.requests)
    bounded = balance_spec.mode.bounds_time or balance_spec.mode.bounds_customers
    empty = {v.id: Route(v.id) for v in instance.vehicles}
    for attempt in range(max(attempts, 1)):
        if attempt == 0:
            order = sorted(requests, key=construction_key)
        else:
            order = [requests[int(i)] for i in rng.permutation(len(requests))]
        routes = dict(empty)
        cache = _InsertionCache(instance, routes, balance_spec.mode)
        complete = True
        for request in order:
            options = cache.options(request.id)
            if attempt == 0:
                own = [ins for ins in options if instance.vehicle(ins.vehicle_id).owner == request.owner]
                options = own or options
            if not options:
                complete = False
                break
            choice = options[0] if attempt == 0 else options[int(rng.integers(len(options)))]
            cache.apply(choice)
        if not complete:
            continue
        solution = make_solution(instance, routes.values())
        if check_solution(instance, solution, balance_spec):
            solution = _balanced_completion(instance, empty, [r.id for r in order], balance_spec) if bounded else None
        if solution is not None:
            logger.debug("Initial solution found at attempt %d (cost %d)", attempt + 1, solution.cost)
            return solution
    raise InfeasibleModelError("No feasible {} solution found after {} construction attempts".format(
        balance_spec.mode.value, attempts))
