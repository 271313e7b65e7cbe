#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
实例生成模块
在平面区域内生成合成CDARP实例，并负责实例文件的读写
"""

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from model import DEFAULT_HORIZON, Company, Instance, InstanceFormatError, Lock, Request, Vehicle, canonical_node_ids
from operators import construction_key
from schedule import Route, try_insert

logger = logging.getLogger(__name__)

# 规模组：(公司数, 每个公司的请求数)
GROUPS = {
    "A": (2, 4),
    "B": (2, 5),
    "C": (4, 12),
    "D": (10, 10),
}


@dataclass(frozen=True)
class GeneratorConfig:
    """生成参数，时间单位为秒"""
    region_side: float = 1.0
    max_trip_time: int = 2400
    capacity: int = 3
    max_duration: int = 20000
    vehicles_per_company: int = 1
    passengers: int = 1
    max_ride: int = 3000
    service_time: int = 120
    window_width: int = 2000
    horizon: int = 20000
    window_attempts: int = 500

    def validate(self) -> List[str]:
        errors = []
        for name in ("max_trip_time", "capacity", "max_duration", "vehicles_per_company",
                     "passengers", "horizon"):
            if getattr(self, name) < 1:
                errors.append("generator.{} must be at least 1".format(name))
        if self.region_side <= 0:
            errors.append("generator.region_side must be positive")
        if self.passengers > self.capacity:
            errors.append("generator.passengers {} exceed capacity {}".format(self.passengers, self.capacity))
        if self.service_time < 0 or self.window_width < 0:
            errors.append("generator.service_time and generator.window_width must not be negative")
        if self.window_attempts < 0:
            errors.append("generator.window_attempts must not be negative")
        if self.window_width > self.horizon:
            errors.append("generator.window_width {} exceeds horizon {}".format(self.window_width, self.horizon))
        return errors


def travel_matrix(points: np.ndarray, diameter: float, max_trip_time: int) -> np.ndarray:
    """欧氏距离按区域对角线缩放到 max_trip_time 秒后向上取整"""
    diff = points[:, None, :] - points[None, :, :]
    distance = np.sqrt((diff ** 2).sum(axis=2))
    return np.ceil(distance / diameter * max_trip_time).astype(np.int64)


def _window_start(rng: np.random.Generator, low: int, high: int, request_id: int) -> int:
    if low > high:
        raise ValueError("Request {}: no window placement keeps the request serviceable".format(request_id))
    return int(rng.integers(low, high + 1))


def _draw_windows(rng: np.random.Generator, config: GeneratorConfig, t, company: Company,
                  o: int, d: int, request_id: int) -> Tuple[Tuple[int, int], Tuple[int, int]]:
    """随机选择上车端或下车端给出时间窗，另一端为整个规划期"""
    horizon = config.horizon
    width = config.window_width
    s = config.service_time
    h_out, h_in = company.start_depot, company.end_depot
    direct = t[o][d]
    full = (0, horizon)
    if rng.random() < 0.5:
        low = max(0, t[h_out][o] - width)
        high = min(horizon - width, horizon - 2 * s - direct - t[d][h_in])
        a = _window_start(rng, low, high, request_id)
        return (a, a + width), full
    low = max(0, t[h_out][o] + s + direct - width)
    high = min(horizon - width, horizon - s - t[d][h_in])
    b = _window_start(rng, low, high, request_id)
    return full, (b, b + width)


def owner_pass_failure(instance: Instance) -> Optional[int]:
    """
    按构造顺序把每个请求以最小成本插入所属公司的车辆

    Returns:
        第一个无法插入的请求id，全部插入成功时返回None
    """
    routes = {v.id: Route(v.id) for v in instance.vehicles}
    for request in sorted(instance.requests, key=construction_key):
        options = [try_insert(instance, routes[v.id], request) for v in instance.vehicles if v.owner == request.owner]
        options = [ins for ins in options if ins is not None]
        if not options:
            return request.id
        best = min(options, key=lambda ins: (ins.delta, ins.vehicle_id))
        routes[best.vehicle_id] = Route(best.vehicle_id, best.visits)
    return None


def generate(group: str, seed: int, config: Optional[GeneratorConfig] = None,
             companies: Optional[int] = None, requests_per_company: Optional[int] = None) -> Instance:
    """
    生成实例

    时间窗随机放置后检查不协同构造：某个请求无法插入所属公司车辆时重新抽取它的时间窗，
    同一请求连续失败时一并重抽同公司另一个请求，最多重抽 window_attempts 次。

    Args:
        group: 规模组 A/B/C/D，或 custom（需给出 companies 和 requests_per_company）
        seed: 随机种子
        config: 生成参数

    Returns:
        Instance: 每个请求都可由所属公司车辆从时刻0出发单独服务的实例
    """
    config = config or GeneratorConfig()
    errors = config.validate()
    if errors:
        raise ValueError("\n".join(errors))

    group = group.upper()
    if group == "CUSTOM":
        if not companies or not requests_per_company:
            raise ValueError("Custom group needs companies and requests_per_company")
        n_companies, per_company = companies, requests_per_company
    elif group in GROUPS:
        n_companies, per_company = GROUPS[group]
    else:
        raise ValueError("Unknown instance group: {} (expected A, B, C, D or custom)".format(group))

    rng = np.random.default_rng(seed)
    n_requests = n_companies * per_company
    start, end, pickup, drop = canonical_node_ids(n_companies, n_requests)
    side = config.region_side

    depots = rng.uniform(0.0, side, size=(n_companies, 2))
    origins = rng.uniform(0.0, side, size=(n_requests, 2))
    destinations = rng.uniform(0.0, side, size=(n_requests, 2))
    points = np.vstack([depots, depots, origins, destinations])
    travel = travel_matrix(points, side * math.sqrt(2.0), config.max_trip_time)
    t = travel.tolist()

    company_list = [Company(m + 1, start(m), end(m)) for m in range(n_companies)]
    vehicles = []
    for company in company_list:
        for _ in range(config.vehicles_per_company):
            vehicles.append(Vehicle(len(vehicles) + 1, company.id, config.capacity, config.max_duration,
                                    company.start_depot, company.end_depot))

    def build(j: int, windows) -> Request:
        direct = t[pickup(j)][drop(j)]
        return Request(
            id=j + 1, owner=company_list[j // per_company].id, origin=pickup(j), destination=drop(j),
            passengers=config.passengers, direct_time=direct,
            service_pickup=config.service_time, service_drop=config.service_time,
            pickup_window=windows[0], drop_window=windows[1],
            max_ride=max(config.max_ride, direct),
        )

    def redraw(j: int) -> Request:
        return build(j, _draw_windows(rng, config, t, company_list[j // per_company], pickup(j), drop(j), j + 1))

    requests = [redraw(j) for j in range(n_requests)]
    instance = Instance.create(company_list, vehicles, requests, travel, horizon=config.horizon, seed=seed)

    redraws = 0
    streak = (None, 0)
    failed = owner_pass_failure(instance)
    while failed is not None and redraws < config.window_attempts:
        j = failed - 1
        streak = (failed, streak[1] + 1) if streak[0] == failed else (failed, 1)
        requests[j] = redraw(j)
        if streak[1] % 5 == 0 and per_company > 1:
            first = (j // per_company) * per_company
            other = first + int(rng.integers(per_company - 1))
            other = other + 1 if other >= j else other
            requests[other] = redraw(other)
        redraws += 1
        instance = Instance.create(company_list, vehicles, requests, travel, horizon=config.horizon, seed=seed)
        failed = owner_pass_failure(instance)

    if failed is not None:
        logger.warning("Group %s seed %d: request %d still has no owner insertion after %d window redraws",
                       group, seed, failed, redraws)
    logger.debug("Generated group %s instance (seed %d): %d companies, %d requests, %d window redraws",
                 group, seed, n_companies, n_requests, redraws)
    return instance


def instance_to_data(instance: Instance) -> Dict[str, Any]:
    data = {
        "companies": [{"id": c.id, "start_depot": c.start_depot, "end_depot": c.end_depot}
                      for c in instance.companies],
        "vehicles": [{"id": v.id, "owner": v.owner, "capacity": v.capacity, "max_duration": v.max_duration,
                      "start_depot": v.start_depot, "end_depot": v.end_depot} for v in instance.vehicles],
        "requests": [{
            "id": r.id, "owner": r.owner, "origin": r.origin, "destination": r.destination,
            "passengers": r.passengers, "direct_time": r.direct_time,
            "service_pickup": r.service_pickup, "service_drop": r.service_drop,
            "pickup_window": list(r.pickup_window), "drop_window": list(r.drop_window),
            "max_ride": r.max_ride, "lock": r.lock.to_data(),
        } for r in instance.requests],
        "matrix": instance.travel.tolist(),
        "horizon": instance.horizon,
        "seed": instance.seed,
    }
    if not np.array_equal(instance.cost, instance.travel):
        data["cost_matrix"] = instance.cost.tolist()
    return data


def write_instance(instance: Instance, path) -> str:
    output_path = Path(path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    with open(output_path, "w", encoding="utf-8") as f:
        f.write(json.dumps(instance_to_data(instance), indent=2, sort_keys=True))
        f.write("\n")
    return str(output_path)


def _field(entry: Dict, name: str, where: str):
    if name not in entry:
        raise InstanceFormatError("{}: missing field '{}'".format(where, name))
    return entry[name]


def _window(value, where: str) -> Tuple[int, int]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise InstanceFormatError("{}: window must be a pair [earliest, latest]".format(where))
    return int(value[0]), int(value[1])


def instance_from_data(data: Dict[str, Any], source: str = "<data>") -> Instance:
    """由实例文件内容构造实例，缺失键或字段时报告其名称"""
    if not isinstance(data, dict):
        raise InstanceFormatError("{}: top level must be an object".format(source))
    for key in ("companies", "vehicles", "requests", "matrix"):
        if key not in data:
            raise InstanceFormatError("{}: missing key '{}'".format(source, key))

    try:
        companies = []
        for i, entry in enumerate(data["companies"]):
            where = "{}: companies[{}]".format(source, i)
            companies.append(Company(int(_field(entry, "id", where)), int(_field(entry, "start_depot", where)),
                                     int(_field(entry, "end_depot", where))))
        vehicles = []
        for i, entry in enumerate(data["vehicles"]):
            where = "{}: vehicles[{}]".format(source, i)
            vehicles.append(Vehicle(*(int(_field(entry, name, where)) for name in
                                      ("id", "owner", "capacity", "max_duration", "start_depot", "end_depot"))))
        requests = []
        for i, entry in enumerate(data["requests"]):
            where = "{}: requests[{}]".format(source, i)
            requests.append(Request(
                id=int(_field(entry, "id", where)),
                owner=int(_field(entry, "owner", where)),
                origin=int(_field(entry, "origin", where)),
                destination=int(_field(entry, "destination", where)),
                passengers=int(_field(entry, "passengers", where)),
                direct_time=int(_field(entry, "direct_time", where)),
                service_pickup=int(_field(entry, "service_pickup", where)),
                service_drop=int(_field(entry, "service_drop", where)),
                pickup_window=_window(_field(entry, "pickup_window", where), where),
                drop_window=_window(_field(entry, "drop_window", where), where),
                max_ride=int(_field(entry, "max_ride", where)),
                lock=Lock.from_data(entry.get("lock")),
            ))
    except (TypeError, ValueError) as e:
        raise InstanceFormatError("{}: {}".format(source, e))

    matrix = data["matrix"]
    if not isinstance(matrix, list) or any(not isinstance(row, list) for row in matrix):
        raise InstanceFormatError("{}: 'matrix' must be a list of rows".format(source))
    if len({len(row) for row in matrix}) > 1:
        raise InstanceFormatError("{}: 'matrix' rows differ in length".format(source))

    horizon = int(data.get("horizon", DEFAULT_HORIZON))
    seed = data.get("seed")
    return Instance.create(companies, vehicles, requests, matrix, data.get("cost_matrix"),
                           horizon=horizon, seed=None if seed is None else int(seed))


def read_instance(path) -> Instance:
    """
    读取实例文件

    Raises:
        InstanceFormatError: JSON语法错误（给出行号）或缺少键/字段
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise InstanceFormatError("{} line {}: {}".format(path, e.lineno, e.msg))
    return instance_from_data(data, str(path))
