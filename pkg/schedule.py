#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
路线调度模块
负责路线表示、服务时刻计算、可行性检查、成本和平衡量计算以及解文件读写
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from model import BalanceSpec, Instance, InstanceFormatError, Mode, Request, compute_thresholds

WINDOW = "window"
RIDE_TIME = "ride-time"
CAPACITY = "capacity"
DURATION = "duration"


@dataclass(frozen=True)
class Route:
    """单车路线：访问节点序列，不含隐含的起终点车场"""
    vehicle_id: int
    visits: Tuple[int, ...] = ()

    def without(self, request: Request) -> "Route":
        return Route(self.vehicle_id, tuple(n for n in self.visits if n not in (request.origin, request.destination)))


@dataclass(frozen=True)
class Schedule:
    """
    路线时刻表

    start_times/loads 与 path 一一对应，path 包含首尾车场。
    """
    vehicle_id: int
    path: Tuple[int, ...]
    start_times: Tuple[int, ...]
    loads: Tuple[int, ...]
    ride_times: Dict[int, int]
    duration: int

    @property
    def visits(self) -> Tuple[int, ...]:
        return self.path[1:-1]


@dataclass(frozen=True)
class Infeasible:
    """调度不可行原因：违反的约束类别和对象"""
    constraint: str
    subject: str
    detail: str = ""

    def __bool__(self):
        return False

    def __str__(self):
        text = "{} violated at {}".format(self.constraint, self.subject)
        return "{} ({})".format(text, self.detail) if self.detail else text


ScheduleResult = Union[Schedule, Infeasible]


@dataclass(frozen=True)
class Solution:
    """完整解：每辆车一条路线，附总成本与各公司平衡量"""
    routes: Tuple[Route, ...]
    cost: int
    time_balance: Dict[int, int]
    customer_balance: Dict[int, int]

    def route_of(self, vehicle_id: int) -> Route:
        for route in self.routes:
            if route.vehicle_id == vehicle_id:
                return route
        raise KeyError(vehicle_id)

    def assignment(self, instance: Instance) -> Dict[int, int]:
        """返回 {请求id: 服务车辆id}"""
        served = {}
        for route in self.routes:
            for node in route.visits:
                request = instance.request_of_node.get(node)
                if request is not None and node == request.origin:
                    served[request.id] = route.vehicle_id
        return served

    def served_requests(self, instance: Instance) -> List[int]:
        return sorted(self.assignment(instance))


@dataclass(frozen=True)
class Insertion:
    vehicle_id: int
    pickup_position: int
    drop_position: int
    delta: int
    visits: Tuple[int, ...]


def _schedule_path(instance: Instance, path: Sequence[int], vehicle_id: Optional[int],
                   capacity: int, max_duration: Optional[int] = None,
                   ride_cap_requests: Optional[Iterable[int]] = None) -> ScheduleResult:
    """
    对一条节点序列计算服务时刻

    先做最早时刻前推，再按前向时间松弛推迟出发以缩短等待和乘车时间，
    仍违反约束时才判定不可行。path[0] 的服务开始时刻即出发基准。

    Args:
        path: 节点序列（路线时包含首尾车场）
        capacity: 载客上限
        max_duration: 路线最长时长，None表示不检查
        ride_cap_requests: 需检查乘车时间上限的请求id集合，None表示全部
    """
    t = instance.travel_rows
    e = instance.earliest
    l = instance.latest
    s = instance.service
    q = instance.flow
    request_of_node = instance.request_of_node
    n = len(path)

    loads = [0] * n
    load = 0
    for idx, node in enumerate(path):
        load += q[node]
        if load > capacity or load < 0:
            return Infeasible(CAPACITY, "node {}".format(node), "load {} exceeds {}".format(load, capacity))
        loads[idx] = load

    # 下车点位置 -> 对应上车点位置
    partner = [-1] * n
    pairs = []
    pickup_at = {}
    for idx, node in enumerate(path):
        request = request_of_node.get(node)
        if request is None:
            continue
        if node == request.origin:
            pickup_at[request.id] = idx
        elif request.id in pickup_at:
            partner[idx] = pickup_at[request.id]
            pairs.append((pickup_at[request.id], idx, request))
    caps = [math.inf] * n
    enforced = None if ride_cap_requests is None else set(ride_cap_requests)
    for pickup_idx, drop_idx, request in pairs:
        if enforced is None or request.id in enforced:
            caps[drop_idx] = request.max_ride

    B = [0] * n
    W = [0] * n

    def forward(k: int):
        for i in range(k + 1, n):
            prev = path[i - 1]
            node = path[i]
            arrival = B[i - 1] + s[prev] + t[prev][node]
            B[i] = arrival if arrival > e[node] else e[node]
            W[i] = B[i] - arrival

    def ride(pickup_idx: int, drop_idx: int) -> int:
        return B[drop_idx] - B[pickup_idx] - s[path[pickup_idx]]

    def forward_slack(i: int) -> float:
        slack = math.inf
        waited = 0
        for j in range(i, n):
            if j > i:
                waited += W[j]
            room = l[path[j]] - B[j]
            p = partner[j]
            if p != -1 and p < i and caps[j] != math.inf:
                room = min(room, caps[j] - ride(p, j))
            slack = min(slack, waited + max(room, 0))
        return slack

    B[0] = e[path[0]]
    forward(0)
    for idx in range(n):
        if B[idx] > l[path[idx]]:
            return Infeasible(WINDOW, "node {}".format(path[idx]),
                              "earliest start {} after {}".format(B[idx], l[path[idx]]))

    if n > 1:
        B[0] += int(min(forward_slack(0), sum(W[1:])))
        forward(0)

        for pickup_idx, drop_idx, request in pairs:
            if ride(pickup_idx, drop_idx) <= caps[drop_idx]:
                continue
            delay = min(forward_slack(pickup_idx), sum(W[pickup_idx + 1:]))
            if delay > 0:
                B[pickup_idx] += int(delay)
                forward(pickup_idx)

    ride_times = {}
    for pickup_idx, drop_idx, request in pairs:
        value = ride(pickup_idx, drop_idx)
        if value > caps[drop_idx]:
            return Infeasible(RIDE_TIME, "request {}".format(request.id),
                              "ride {} exceeds {}".format(value, request.max_ride))
        if value < request.direct_time:
            return Infeasible(RIDE_TIME, "request {}".format(request.id),
                              "ride {} below direct time {}".format(value, request.direct_time))
        ride_times[request.id] = value

    for idx in range(n):
        if B[idx] > l[path[idx]]:
            return Infeasible(WINDOW, "node {}".format(path[idx]),
                              "start {} after {}".format(B[idx], l[path[idx]]))

    duration = B[-1] - B[0] - s[path[0]] if n else 0
    if max_duration is not None and duration > max_duration:
        return Infeasible(DURATION, "vehicle {}".format(vehicle_id),
                          "duration {} exceeds {}".format(duration, max_duration))

    return Schedule(vehicle_id, tuple(path), tuple(B), tuple(loads), ride_times, duration)


def earliest_schedule(instance: Instance, route: Route) -> ScheduleResult:
    """
    计算路线时刻表

    Args:
        instance: 实例
        route: 满足结构约束的路线

    Returns:
        Schedule，或指明首个违反约束类别和对象的 Infeasible
    """
    vehicle = instance.vehicle(route.vehicle_id)
    path = (vehicle.start_depot,) + tuple(route.visits) + (vehicle.end_depot,)
    return _schedule_path(instance, path, vehicle.id, vehicle.capacity, vehicle.max_duration)


def sequence_makespan(instance: Instance, nodes: Sequence[int], capacity: int,
                      ride_cap_requests: Optional[Iterable[int]] = None) -> Optional[int]:
    """自由出发时刻下执行节点序列的最短用时（首节点离开到末节点开始服务），不可行返回None"""
    result = _schedule_path(instance, nodes, None, capacity, None, ride_cap_requests)
    if isinstance(result, Infeasible):
        return None
    return result.duration


def route_cost(instance: Instance, route: Route) -> int:
    vehicle = instance.vehicle(route.vehicle_id)
    c = instance.cost_rows
    total = 0
    previous = vehicle.start_depot
    for node in route.visits:
        total += c[previous][node]
        previous = node
    return total + c[previous][vehicle.end_depot]


def solution_cost(instance: Instance, solution: Solution) -> int:
    """路线经过的所有弧（含车场出入弧）的成本之和"""
    return sum(route_cost(instance, route) for route in solution.routes)


def _balances_from_assignment(instance: Instance, assignment: Dict[int, int]) -> Dict[int, Tuple[int, int]]:
    time_balance = {m: 0 for m in instance.company_ids}
    customer_balance = {m: 0 for m in instance.company_ids}
    for request_id, vehicle_id in assignment.items():
        request = instance.request(request_id)
        server = instance.vehicle(vehicle_id).owner
        if server == request.owner:
            continue
        time_balance[server] += request.direct_time
        customer_balance[server] += request.passengers
        time_balance[request.owner] -= request.direct_time
        customer_balance[request.owner] -= request.passengers
    return {m: (time_balance[m], customer_balance[m]) for m in instance.company_ids}


def balances(instance: Instance, solution: Solution) -> Dict[int, Tuple[int, int]]:
    """
    计算各公司的时间平衡 S_m 和客户平衡 U_m

    S_m = 获得请求的直达时间之和 - 让出请求的直达时间之和，U_m 以乘客数同理计算。

    Returns:
        {公司id: (S_m, U_m)}
    """
    return _balances_from_assignment(instance, solution.assignment(instance))


def make_solution(instance: Instance, routes: Iterable[Route]) -> Solution:
    """由路线构造解并计算成本和平衡量，缺失车辆补空路线"""
    by_vehicle = {route.vehicle_id: route for route in routes}
    ordered = tuple(by_vehicle.get(v.id, Route(v.id)) for v in instance.vehicles)
    cost = sum(route_cost(instance, route) for route in ordered)
    solution = Solution(ordered, cost, {}, {})
    computed = balances(instance, solution)
    return Solution(ordered, cost,
                    {m: value[0] for m, value in computed.items()},
                    {m: value[1] for m, value in computed.items()})


def _format_number(value) -> str:
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def allowed_company(instance: Instance, request: Request, company_id: int, mode: Mode) -> bool:
    """请求能否由该公司服务（NC模式和特殊客户约束）"""
    if mode == Mode.NC and company_id != request.owner:
        return False
    return request.lock.allows(company_id, request.owner)


def check_solution(instance: Instance, solution: Solution, balance_spec: BalanceSpec) -> List[str]:
    """
    检查解的完整可行性

    Args:
        instance: 实例
        solution: 待检查的解
        balance_spec: 平衡约束配置

    Returns:
        违规信息列表，空列表表示可行
    """
    report = []
    spec = balance_spec.for_instance(instance)
    mode = spec.mode
    known_vehicles = {v.id for v in instance.vehicles}
    seen_vehicles = set()
    assignment = {}

    for route in solution.routes:
        if route.vehicle_id not in known_vehicles:
            report.append("Route for unknown vehicle {}".format(route.vehicle_id))
            continue
        if route.vehicle_id in seen_vehicles:
            report.append("Vehicle {} has more than one route".format(route.vehicle_id))
            continue
        seen_vehicles.add(route.vehicle_id)

        structural = False
        position = {}
        for idx, node in enumerate(route.visits):
            request = instance.request_of_node.get(node)
            if request is None:
                report.append("Vehicle {}: node {} is not a request node".format(route.vehicle_id, node))
                structural = True
            elif node in position:
                report.append("Vehicle {}: node {} visited twice".format(route.vehicle_id, node))
                structural = True
            position[node] = idx
        for node, idx in position.items():
            request = instance.request_of_node.get(node)
            if request is None or node != request.origin:
                continue
            drop_idx = position.get(request.destination)
            if drop_idx is None:
                report.append("Vehicle {}: request {} picked up but not dropped".format(route.vehicle_id, request.id))
                structural = True
            elif drop_idx < idx:
                report.append("Vehicle {}: request {} dropped before pickup".format(route.vehicle_id, request.id))
                structural = True
            elif request.id in assignment:
                report.append("Request {} served more than once".format(request.id))
                structural = True
            else:
                assignment[request.id] = route.vehicle_id
        for node in position:
            request = instance.request_of_node.get(node)
            if request is not None and node == request.destination and request.origin not in position:
                report.append("Vehicle {}: request {} dropped but not picked up".format(route.vehicle_id, request.id))
                structural = True
        if structural:
            continue

        result = earliest_schedule(instance, route)
        if isinstance(result, Infeasible):
            report.append("Vehicle {}: {}".format(route.vehicle_id, result))

    for vehicle_id in sorted(known_vehicles - seen_vehicles):
        report.append("Vehicle {} has no route".format(vehicle_id))

    for request in instance.requests:
        if request.id not in assignment:
            report.append("Request {} not served".format(request.id))
            continue
        server = instance.vehicle(assignment[request.id]).owner
        if mode == Mode.NC and server != request.owner:
            report.append("Request {} of company {} served by company {} in NC mode".format(
                request.id, request.owner, server))
        elif not request.lock.allows(server, request.owner):
            report.append("Request {} lock forbids service by company {}".format(request.id, server))

    report.extend(balance_violations(instance, assignment, spec))
    return report


def balance_violations(instance: Instance, assignment: Dict[int, int], spec: BalanceSpec,
                       thresholds: Optional[Dict[int, Tuple[float, int]]] = None) -> List[str]:
    """按请求分配检查时间和客户平衡约束 |S_m + S'_m| ≤ S̃_m、|U_m + U'_m| ≤ Ũ_m"""
    report = []
    mode = spec.mode
    if mode.bounds_time or mode.bounds_customers:
        thresholds = thresholds or compute_thresholds(instance, spec)
        computed = _balances_from_assignment(instance, assignment)
        for company_id in instance.company_ids:
            time_value, customer_value = computed[company_id]
            time_limit, customer_limit = thresholds[company_id]
            if mode.bounds_time:
                total = abs(time_value + spec.time_offset(company_id))
                if total > time_limit:
                    report.append("time balance company {}: {} > {}".format(
                        company_id, total, _format_number(time_limit)))
            if mode.bounds_customers:
                total = abs(customer_value + spec.customer_offset(company_id))
                if total > customer_limit:
                    report.append("customer balance company {}: {} > {}".format(
                        company_id, total, customer_limit))
    return report


def balance_excess(instance: Instance, assignment: Dict[int, int], spec: BalanceSpec,
                   thresholds: Optional[Dict[int, Tuple[float, int]]] = None) -> float:
    """
    平衡量超出阈值的相对总量

    每家公司取 max(0, |S_m + S'_m| - S̃_m) / max(S̃_m, 1)，客户平衡同理，求和。

    Returns:
        0 表示满足当前模式的全部平衡约束
    """
    mode = spec.mode
    if not (mode.bounds_time or mode.bounds_customers):
        return 0.0
    thresholds = thresholds or compute_thresholds(instance, spec)
    computed = _balances_from_assignment(instance, assignment)
    excess = 0.0
    for company_id in instance.company_ids:
        time_value, customer_value = computed[company_id]
        time_limit, customer_limit = thresholds[company_id]
        if mode.bounds_time:
            total = abs(time_value + spec.time_offset(company_id))
            excess += max(0.0, total - time_limit) / max(time_limit, 1.0)
        if mode.bounds_customers:
            total = abs(customer_value + spec.customer_offset(company_id))
            excess += max(0, total - customer_limit) / max(customer_limit, 1)
    return excess


def insertion_candidates(instance: Instance, route: Route, request: Request) -> List[Tuple[int, int, int]]:
    """枚举全部插入位置对 (delta, 上车位置, 下车位置前的原序号)，按成本和位置排序"""
    vehicle = instance.vehicle(route.vehicle_id)
    c = instance.cost_rows
    o, d = request.origin, request.destination
    path = (vehicle.start_depot,) + tuple(route.visits) + (vehicle.end_depot,)
    size = len(route.visits)
    candidates = []
    for i in range(size + 1):
        a, b = path[i], path[i + 1]
        pickup_delta = c[a][o] + c[o][b] - c[a][b]
        candidates.append((c[a][o] + c[o][d] + c[d][b] - c[a][b], i, i))
        for j in range(i + 1, size + 1):
            x, y = path[j], path[j + 1]
            candidates.append((pickup_delta + c[x][d] + c[d][y] - c[x][y], i, j))
    candidates.sort()
    return candidates


def try_insert(instance: Instance, route: Route, request: Request) -> Optional[Insertion]:
    """
    在路线中寻找请求的最优可行插入位置

    Returns:
        Insertion（上车位置、下车位置、成本增量），不可行时返回None；
        成本相同时取上车位置最早、其次下车位置最早者
    """
    visits = tuple(route.visits)
    for delta, i, j in insertion_candidates(instance, route, request):
        new_visits = visits[:i] + (request.origin,) + visits[i:j] + (request.destination,) + visits[j:]
        result = earliest_schedule(instance, Route(route.vehicle_id, new_visits))
        if not isinstance(result, Infeasible):
            return Insertion(route.vehicle_id, i, j + 1, delta, new_visits)
    return None


def solution_to_data(instance: Instance, solution: Solution, balance_spec: Optional[BalanceSpec] = None) -> Dict:
    """解文件内容：路线、时刻、成本、平衡量、模式、阈值和偏移量"""
    routes = []
    for route in solution.routes:
        entry = {"vehicle": route.vehicle_id, "visits": list(route.visits)}
        result = earliest_schedule(instance, route)
        if isinstance(result, Schedule):
            entry["start_times"] = list(result.start_times)
            entry["loads"] = list(result.loads)
            entry["duration"] = result.duration
            entry["ride_times"] = {str(k): v for k, v in sorted(result.ride_times.items())}
        routes.append(entry)

    data = {"cost": solution.cost, "routes": routes, "balances": {}}
    spec = balance_spec.for_instance(instance) if balance_spec else None
    thresholds = compute_thresholds(instance, spec) if spec else {}
    for company_id in instance.company_ids:
        entry = {"S": solution.time_balance.get(company_id, 0), "U": solution.customer_balance.get(company_id, 0)}
        if spec:
            entry["S_offset"] = spec.time_offset(company_id)
            entry["U_offset"] = spec.customer_offset(company_id)
            entry["S_threshold"] = thresholds[company_id][0]
            entry["U_threshold"] = thresholds[company_id][1]
        data["balances"][str(company_id)] = entry
    if spec:
        data["mode"] = spec.mode.value
        data["alpha_t"] = spec.alpha_t
        data["alpha_c"] = spec.alpha_c
    return data


def write_solution(path, instance: Instance, solution: Solution, balance_spec: Optional[BalanceSpec] = None) -> str:
    output_path = Path(path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    with open(output_path, "w", encoding="utf-8") as f:
        f.write(json.dumps(solution_to_data(instance, solution, balance_spec), indent=2, sort_keys=True))
        f.write("\n")
    return str(output_path)


def read_solution(path, instance: Instance) -> Tuple[Solution, Dict]:
    """
    读取解文件

    Returns:
        (按路线重新计算成本和平衡量的解, 原始文件内容)

    Raises:
        InstanceFormatError: JSON语法错误、缺少键或字段、车辆不属于实例
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise InstanceFormatError("Solution file {} line {}: {}".format(path, e.lineno, e.msg))
    if "routes" not in data:
        raise InstanceFormatError("Solution file {} is missing key 'routes'".format(path))
    routes = []
    known = {v.id for v in instance.vehicles}
    for i, entry in enumerate(data["routes"]):
        where = "Solution file {} routes[{}]".format(path, i)
        if not isinstance(entry, dict) or "vehicle" not in entry:
            raise InstanceFormatError("{}: missing field 'vehicle'".format(where))
        try:
            route = Route(int(entry["vehicle"]), tuple(int(n) for n in entry.get("visits", [])))
        except (TypeError, ValueError) as e:
            raise InstanceFormatError("{}: {}".format(where, e))
        if route.vehicle_id not in known:
            raise InstanceFormatError("{}: unknown vehicle {}".format(where, route.vehicle_id))
        routes.append(route)
    return make_solution(instance, routes), data
