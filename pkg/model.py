#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
协同拨号叫车问题(CDARP)领域模型模块
定义实例、请求、车辆、公司以及平衡约束配置，提供实例校验和阈值计算
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Dict, List, Optional, Tuple

import numpy as np


DEFAULT_HORIZON = 86400

NODE_DEPOT_START = "depot-start"
NODE_DEPOT_END = "depot-end"
NODE_PICKUP = "pickup"
NODE_DROP = "drop"


class CdarpError(Exception):
    """求解器异常基类"""


class InstanceFormatError(CdarpError):
    """实例文件格式错误"""


class InfeasibleModelError(CdarpError):
    """当前模式下不存在可行解"""


class InfeasibleSolutionError(CdarpError):
    """给定解在当前模式下不可行"""


class BudgetExceededError(CdarpError):
    """精确枚举超出预算"""


class ModelTooLargeError(CdarpError):
    """LP模型变量数超过上限"""


class LpParseError(CdarpError):
    """外部求解器结果解析错误"""


class Mode(str, Enum):
    """协同模式"""
    NC = "NC"
    UC = "UC"
    T = "T"
    C = "C"
    TC = "TC"

    @classmethod
    def parse(cls, value) -> "Mode":
        if isinstance(value, Mode):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError("Unknown mode: {} (expected one of nc, uc, t, c, tc)".format(value))

    @property
    def bounds_time(self) -> bool:
        return self in (Mode.T, Mode.TC)

    @property
    def bounds_customers(self) -> bool:
        return self in (Mode.C, Mode.TC)


class LockKind(str, Enum):
    FREE = "free"
    OWNER = "must-stay-with-owner"
    DENYLIST = "denylist"


@dataclass(frozen=True)
class Lock:
    """特殊客户约束：自由、必须由所属公司服务、或拒绝服务的公司列表"""
    kind: LockKind = LockKind.FREE
    denied: Tuple[int, ...] = ()

    def allows(self, company_id: int, owner: int) -> bool:
        if self.kind == LockKind.OWNER:
            return company_id == owner
        if self.kind == LockKind.DENYLIST:
            return company_id not in self.denied
        return True

    def to_data(self):
        if self.kind == LockKind.DENYLIST:
            return {"denylist": list(self.denied)}
        return self.kind.value

    @classmethod
    def from_data(cls, data) -> "Lock":
        if data is None or data == LockKind.FREE.value:
            return cls()
        if data == LockKind.OWNER.value:
            return cls(LockKind.OWNER)
        if isinstance(data, dict) and "denylist" in data:
            return cls(LockKind.DENYLIST, tuple(sorted(int(m) for m in data["denylist"])))
        raise InstanceFormatError("Invalid lock value: {!r}".format(data))


@dataclass(frozen=True)
class Company:
    id: int
    start_depot: int
    end_depot: int


@dataclass(frozen=True)
class Vehicle:
    id: int
    owner: int
    capacity: int
    max_duration: int
    start_depot: int
    end_depot: int


@dataclass(frozen=True)
class Request:
    """运输请求，时间单位均为秒"""
    id: int
    owner: int
    origin: int
    destination: int
    passengers: int
    direct_time: int
    service_pickup: int
    service_drop: int
    pickup_window: Tuple[int, int]
    drop_window: Tuple[int, int]
    max_ride: int
    lock: Lock = field(default_factory=Lock)


@dataclass(frozen=True)
class Node:
    id: int
    kind: str
    window: Tuple[int, int]
    service: int
    flow: int


@dataclass(frozen=True, eq=False)
class Instance:
    """
    CDARP实例

    节点编号遵循规范顺序：起点车场、终点车场、上车点、下车点，各自按id排序。
    实例在校验后视为不可变，可在并发求解之间共享。
    """
    companies: Tuple[Company, ...]
    vehicles: Tuple[Vehicle, ...]
    requests: Tuple[Request, ...]
    nodes: Tuple[Node, ...]
    travel: np.ndarray
    cost: np.ndarray
    horizon: int = DEFAULT_HORIZON
    seed: Optional[int] = None

    @classmethod
    def create(cls, companies, vehicles, requests, travel, cost=None,
               horizon: int = DEFAULT_HORIZON, seed: Optional[int] = None) -> "Instance":
        """
        根据公司、车辆和请求构造实例，节点属性由请求推导

        Args:
            travel: 行驶时间矩阵（秒）
            cost: 成本矩阵，缺省时等于行驶时间
        """
        companies = tuple(sorted(companies, key=lambda c: c.id))
        vehicles = tuple(sorted(vehicles, key=lambda v: v.id))
        requests = tuple(sorted(requests, key=lambda r: r.id))
        travel = _frozen_matrix(travel)
        cost = travel if cost is None else _frozen_matrix(cost)
        nodes = build_nodes(companies, requests, horizon)
        return cls(companies, vehicles, requests, nodes, travel, cost, int(horizon), seed)

    # 以下缓存为调度评估提供纯Python查找表

    @cached_property
    def travel_rows(self) -> List[List[int]]:
        return self.travel.tolist()

    @cached_property
    def cost_rows(self) -> List[List[int]]:
        return self.cost.tolist()

    @cached_property
    def earliest(self) -> List[int]:
        return [n.window[0] for n in self.nodes]

    @cached_property
    def latest(self) -> List[int]:
        return [n.window[1] for n in self.nodes]

    @cached_property
    def service(self) -> List[int]:
        return [n.service for n in self.nodes]

    @cached_property
    def flow(self) -> List[int]:
        return [n.flow for n in self.nodes]

    @cached_property
    def request_of_node(self) -> Dict[int, Request]:
        mapping = {}
        for request in self.requests:
            mapping[request.origin] = request
            mapping[request.destination] = request
        return mapping

    @cached_property
    def request_index(self) -> Dict[int, int]:
        return {request.id: idx for idx, request in enumerate(self.requests)}

    @cached_property
    def _requests_by_id(self) -> Dict[int, Request]:
        return {request.id: request for request in self.requests}

    @cached_property
    def _vehicles_by_id(self) -> Dict[int, Vehicle]:
        return {vehicle.id: vehicle for vehicle in self.vehicles}

    @cached_property
    def company_ids(self) -> Tuple[int, ...]:
        return tuple(c.id for c in self.companies)

    @cached_property
    def max_travel(self) -> int:
        return int(self.travel.max()) if self.travel.size else 0

    def request(self, request_id: int) -> Request:
        return self._requests_by_id[request_id]

    def vehicle(self, vehicle_id: int) -> Vehicle:
        return self._vehicles_by_id[vehicle_id]

    def requests_of(self, company_id: int) -> List[Request]:
        return [r for r in self.requests if r.owner == company_id]

    @property
    def node_count(self) -> int:
        return len(self.nodes)


def _frozen_matrix(matrix) -> np.ndarray:
    array = np.array(matrix, dtype=np.int64)
    array.setflags(write=False)
    return array


def canonical_node_ids(n_companies: int, n_requests: int):
    """
    返回规范节点编号函数

    Returns:
        (起点车场编号, 终点车场编号, 上车点编号, 下车点编号) 四个按位置取编号的函数
    """
    start = lambda i: i
    end = lambda i: n_companies + i
    pickup = lambda j: 2 * n_companies + j
    drop = lambda j: 2 * n_companies + n_requests + j
    return start, end, pickup, drop


def build_nodes(companies, requests, horizon: int) -> Tuple[Node, ...]:
    """由公司和请求推导节点属性（时间窗、服务时间、流量）"""
    nodes: Dict[int, Node] = {}
    for company in companies:
        nodes[company.start_depot] = Node(company.start_depot, NODE_DEPOT_START, (0, horizon), 0, 0)
        nodes[company.end_depot] = Node(company.end_depot, NODE_DEPOT_END, (0, horizon), 0, 0)
    for request in requests:
        nodes[request.origin] = Node(request.origin, NODE_PICKUP, tuple(request.pickup_window),
                                     request.service_pickup, request.passengers)
        nodes[request.destination] = Node(request.destination, NODE_DROP, tuple(request.drop_window),
                                          request.service_drop, -request.passengers)
    return tuple(nodes[i] for i in sorted(nodes))


@dataclass(frozen=True)
class BalanceSpec:
    """
    平衡约束配置

    mode为NC时阈值被忽略；偏移量(记忆)缺省为0。
    """
    mode: Mode = Mode.UC
    alpha_t: float = 0.0
    alpha_c: float = 0.0
    time_thresholds: Optional[Dict[int, float]] = None
    customer_thresholds: Optional[Dict[int, int]] = None
    time_offsets: Dict[int, int] = field(default_factory=dict)
    customer_offsets: Dict[int, int] = field(default_factory=dict)
    customer_rounding: str = "floor"

    def time_offset(self, company_id: int) -> int:
        return self.time_offsets.get(company_id, 0)

    def customer_offset(self, company_id: int) -> int:
        return self.customer_offsets.get(company_id, 0)

    def with_offsets(self, time_offsets: Dict[int, int], customer_offsets: Dict[int, int]) -> "BalanceSpec":
        return replace(self, time_offsets=dict(time_offsets), customer_offsets=dict(customer_offsets))

    def for_instance(self, instance: Instance) -> "BalanceSpec":
        """补齐每个公司的偏移量"""
        return self.with_offsets(
            {m: self.time_offset(m) for m in instance.company_ids},
            {m: self.customer_offset(m) for m in instance.company_ids},
        )


def validate_balance_spec(instance: Instance, spec: BalanceSpec) -> List[str]:
    errors = []
    if spec.alpha_t < 0 or spec.alpha_c < 0:
        errors.append("Balance percentages must be non-negative (alpha_t={}, alpha_c={})".format(
            spec.alpha_t, spec.alpha_c))
    if spec.customer_rounding not in ("floor", "half-up"):
        errors.append("Unsupported customer rounding: {}".format(spec.customer_rounding))
    for name, explicit in (("time", spec.time_thresholds), ("customer", spec.customer_thresholds)):
        for company_id, value in (explicit or {}).items():
            if value < 0:
                errors.append("Negative {} threshold for company {}".format(name, company_id))
    known = set(instance.company_ids)
    for offsets in (spec.time_offsets, spec.customer_offsets):
        for company_id in offsets:
            if company_id not in known:
                errors.append("Offset given for unknown company {}".format(company_id))
    return errors


def validate_instance(instance: Instance) -> List[str]:
    """
    校验实例的全部不变量

    Args:
        instance: 待校验实例

    Returns:
        违规信息列表，空列表表示校验通过
    """
    errors = []
    n_companies = len(instance.companies)
    n_requests = len(instance.requests)
    expected_nodes = 2 * n_companies + 2 * n_requests
    horizon = instance.horizon

    if len(instance.nodes) != expected_nodes:
        errors.append("Node count {} differs from 2*|M|+2*|C| = {}".format(len(instance.nodes), expected_nodes))
    for matrix, name in ((instance.travel, "travel"), (instance.cost, "cost")):
        if matrix.shape != (expected_nodes, expected_nodes):
            errors.append("{} matrix shape {} differs from ({}, {})".format(
                name, matrix.shape, expected_nodes, expected_nodes))
    if errors:
        return errors

    travel = instance.travel
    negative = np.argwhere(travel < 0)
    for i, j in negative[:10]:
        errors.append("Negative travel time t[{}][{}] = {}".format(i, j, travel[i, j]))
    for i in np.nonzero(np.diag(travel))[0]:
        errors.append("Non-zero travel time on diagonal t[{}][{}]".format(i, i))

    start, end, pickup, drop = canonical_node_ids(n_companies, n_requests)
    nodes = instance.nodes
    company_ids = set(instance.company_ids)

    for position, company in enumerate(instance.companies):
        for node_id, kind in ((company.start_depot, NODE_DEPOT_START), (company.end_depot, NODE_DEPOT_END)):
            expected = start(position) if kind == NODE_DEPOT_START else end(position)
            if node_id != expected:
                errors.append("Company {}: {} node {} is not canonical id {}".format(company.id, kind, node_id, expected))
                continue
            node = nodes[node_id]
            if node.kind != kind:
                errors.append("Node {}: kind {} expected {}".format(node_id, node.kind, kind))
            if node.flow != 0:
                errors.append("Node {}: depot flow {} must be 0".format(node_id, node.flow))
            if tuple(node.window) != (0, horizon):
                errors.append("Node {}: depot window {} must be [0, {}]".format(node_id, list(node.window), horizon))

    for vehicle in instance.vehicles:
        if vehicle.capacity < 1:
            errors.append("Vehicle {}: capacity {} must be >= 1".format(vehicle.id, vehicle.capacity))
        if vehicle.max_duration <= 0:
            errors.append("Vehicle {}: max duration {} must be > 0".format(vehicle.id, vehicle.max_duration))
        if vehicle.owner not in company_ids:
            errors.append("Vehicle {}: unknown owner {}".format(vehicle.id, vehicle.owner))
            continue
        owner = next(c for c in instance.companies if c.id == vehicle.owner)
        if (vehicle.start_depot, vehicle.end_depot) != (owner.start_depot, owner.end_depot):
            errors.append("Vehicle {}: depots do not belong to owner {}".format(vehicle.id, vehicle.owner))

    for position, request in enumerate(instance.requests):
        rid = request.id
        if request.owner not in company_ids:
            errors.append("Request {}: unknown owner {}".format(rid, request.owner))
        if request.origin != pickup(position) or request.destination != drop(position):
            errors.append("Request {}: nodes ({}, {}) are not canonical ({}, {})".format(
                rid, request.origin, request.destination, pickup(position), drop(position)))
            continue
        if request.passengers < 1:
            errors.append("Request {}: passengers {} must be >= 1".format(rid, request.passengers))
        if request.max_ride < request.direct_time:
            errors.append("Request {}: max ride {} below direct time {}".format(rid, request.max_ride, request.direct_time))
        if request.pickup_window[0] > request.pickup_window[1]:
            errors.append("Request {}: empty pickup window {}".format(rid, list(request.pickup_window)))
        if request.drop_window[0] > request.drop_window[1]:
            errors.append("Request {}: empty drop window {}".format(rid, list(request.drop_window)))
        matrix_time = int(travel[request.origin, request.destination])
        if request.direct_time != matrix_time:
            errors.append("Request {}: direct time {} differs from matrix entry {}".format(rid, request.direct_time, matrix_time))
        for unknown in set(request.lock.denied) - company_ids:
            errors.append("Request {}: lock names unknown company {}".format(rid, unknown))

        origin, destination = nodes[request.origin], nodes[request.destination]
        if origin.kind != NODE_PICKUP:
            errors.append("Node {}: kind {} expected pickup".format(origin.id, origin.kind))
        if destination.kind != NODE_DROP:
            errors.append("Node {}: kind {} expected drop".format(destination.id, destination.kind))
        if origin.flow != request.passengers:
            errors.append("Node {}: pickup flow {} must equal +{}".format(origin.id, origin.flow, request.passengers))
        if destination.flow != -request.passengers:
            errors.append("Node {}: drop flow {} must equal -{}".format(destination.id, destination.flow, request.passengers))
        if tuple(origin.window) != tuple(request.pickup_window) or tuple(destination.window) != tuple(request.drop_window):
            errors.append("Request {}: node windows disagree with request windows".format(rid))

    return errors


def _scaled(alpha: float, total: int) -> Fraction:
    # 用十进制表示避免0.29*100之类的浮点误差
    return Fraction(repr(float(alpha))) * total


def compute_thresholds(instance: Instance, spec: BalanceSpec) -> Dict[int, Tuple[float, int]]:
    """
    计算每个公司的时间平衡阈值和客户平衡阈值

    S̃_m = α_T · Σ t_c，Ũ_m = α_C · Σ p_c（按配置取整，默认向下取整）；
    显式阈值优先于公式。

    Returns:
        {公司id: (S̃_m, Ũ_m)}
    """
    if spec.alpha_t < 0 or spec.alpha_c < 0:
        raise ValueError("Balance percentages must be non-negative")
    if spec.customer_rounding not in ("floor", "half-up"):
        raise ValueError("Unsupported customer rounding: {}".format(spec.customer_rounding))

    thresholds = {}
    for company in instance.companies:
        owned = instance.requests_of(company.id)
        time_total = sum(r.direct_time for r in owned)
        customer_total = sum(r.passengers for r in owned)

        time_threshold = float(_scaled(spec.alpha_t, time_total))
        customers = _scaled(spec.alpha_c, customer_total)
        if spec.customer_rounding == "floor":
            customer_threshold = math.floor(customers)
        else:
            customer_threshold = math.floor(customers + Fraction(1, 2))

        if spec.time_thresholds and company.id in spec.time_thresholds:
            time_threshold = float(spec.time_thresholds[company.id])
        if spec.customer_thresholds and company.id in spec.customer_thresholds:
            customer_threshold = int(spec.customer_thresholds[company.id])
        thresholds[company.id] = (time_threshold, customer_threshold)
    return thresholds
