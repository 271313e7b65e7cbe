#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
请求相似度度量模块
预先计算相关度(relatedness)和紧密度(closeness)，并在当前解上计算邻近度和可互换度
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from model import Instance, Request
from schedule import Solution, sequence_makespan

logger = logging.getLogger(__name__)

# 两个请求四个节点的六种访问顺序，a为加入的请求，r为参照请求
SEQUENCES = (
    ("Or", "Dr", "Oa", "Da"),
    ("Oa", "Da", "Or", "Dr"),
    ("Or", "Oa", "Dr", "Da"),
    ("Oa", "Or", "Da", "Dr"),
    ("Or", "Oa", "Da", "Dr"),
    ("Oa", "Or", "Dr", "Da"),
)


@dataclass(frozen=True)
class MeasureConfig:
    cap_factor: float = 10.0
    closeness_both_ride_caps: bool = True


@dataclass(frozen=True)
class MeasureTable:
    """
    请求对度量表，按 instance.requests 的顺序索引

    relatedness[a][r] 为 rel_ar，closeness[a][r] 为 close_ar（秒，不可行为inf）；
    对角线无意义。表只依赖实例，可在整个搜索过程中复用。
    """
    request_ids: Tuple[int, ...]
    relatedness: np.ndarray
    closeness: np.ndarray
    closeness_order: np.ndarray
    relatedness_cap: float
    closeness_cap: float

    def index(self, request_id: int) -> int:
        return self.request_ids.index(request_id)

    def rel(self, a: int, r: int) -> float:
        """按请求id取相关度，无穷大替换为上限值"""
        value = self.relatedness[self.index(a), self.index(r)]
        return self.relatedness_cap if math.isinf(value) else float(value)

    def close(self, a: int, r: int) -> float:
        value = self.closeness[self.index(a), self.index(r)]
        return self.closeness_cap if math.isinf(value) else float(value)

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for i, a in enumerate(self.request_ids):
            for j, r in enumerate(self.request_ids):
                if i == j:
                    continue
                rows.append({
                    "a": a,
                    "r": r,
                    "rel": self.relatedness[i, j],
                    "close": self.closeness[i, j],
                    "order": int(self.closeness_order[i, j]),
                })
        return pd.DataFrame(rows, columns=["a", "r", "rel", "close", "order"])

    def dump_csv(self, path) -> str:
        output_path = Path(path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(output_path, index=False)
        return str(output_path)


def _time_span(instance: Instance) -> int:
    # 时间窗上界已被截断到规划期
    horizon = instance.horizon
    latest = max(min(node.window[1], horizon) for node in instance.nodes)
    earliest = min(node.window[0] for node in instance.nodes)
    return latest - earliest


def _half_width(window: Tuple[int, int], horizon: int) -> float:
    return (min(window[1], horizon) - window[0]) / 2.0


def relatedness(instance: Instance, a: Request, r: Request, cap: float = math.inf) -> float:
    """
    计算请求a相对请求r的相关度

    rel_ar = [ (t_{o_a,o_r} + t_{d_a,d_r}) / max t_ij
              + (|半宽'_a - 半宽'_r| + |半宽''_a - 半宽''_r|) / (max l_i - min e_i) ]^{-1}

    Args:
        cap: 空间和时间项都为0（相同请求）时的返回值
    """
    if a.id == r.id:
        raise ValueError("Relatedness needs two distinct requests")
    t = instance.travel_rows
    horizon = instance.horizon
    max_travel = instance.max_travel
    span = _time_span(instance)

    spatial = (t[a.origin][r.origin] + t[a.destination][r.destination]) / max_travel if max_travel else 0.0
    temporal = (abs(_half_width(a.pickup_window, horizon) - _half_width(r.pickup_window, horizon))
                + abs(_half_width(a.drop_window, horizon) - _half_width(r.drop_window, horizon)))
    temporal = temporal / span if span else 0.0
    bracket = spatial + temporal
    if bracket == 0:
        return cap
    return 1.0 / bracket


def _sequence_nodes(a: Request, r: Request, labels) -> List[int]:
    lookup = {"Oa": a.origin, "Da": a.destination, "Or": r.origin, "Dr": r.destination}
    return [lookup[label] for label in labels]


def closeness_by_order(instance: Instance, a: Request, r: Request,
                       both_ride_caps: bool = True) -> List[float]:
    """逐个顺序计算 close_s = time_s - t_r，不可行顺序为inf"""
    if a.id == r.id:
        raise ValueError("Closeness needs two distinct requests")
    min_capacity = min(v.capacity for v in instance.vehicles)
    enforced = [a.id, r.id] if both_ride_caps else [r.id]
    values = []
    # 载客量按最小车辆容量检查，叠载两个请求的顺序可能因此不可行
    for labels in SEQUENCES:
        makespan = sequence_makespan(instance, _sequence_nodes(a, r, labels), min_capacity, enforced)
        if makespan is None:
            values.append(math.inf)
        else:
            values.append(float(max(makespan - r.direct_time, 0)))
    return values


def closeness(instance: Instance, a: Request, r: Request, both_ride_caps: bool = True) -> float:
    """
    计算请求a对请求r的紧密度：六种访问顺序中可行顺序的最小额外用时

    Returns:
        秒数，全部顺序不可行时返回inf
    """
    return min(closeness_by_order(instance, a, r, both_ride_caps))


def build_measure_table(instance: Instance, config: Optional[MeasureConfig] = None) -> MeasureTable:
    """
    构建全部请求对的度量表

    无穷和退化值以表内最大有限值的 cap_factor 倍作为上限。
    """
    config = config or MeasureConfig()
    requests = instance.requests
    n = len(requests)
    rel = np.full((n, n), np.nan)
    close = np.full((n, n), np.nan)
    order = np.full((n, n), -1, dtype=int)

    for i, a in enumerate(requests):
        for j, r in enumerate(requests):
            if i == j:
                continue
            rel[i, j] = relatedness(instance, a, r)
            by_order = closeness_by_order(instance, a, r, config.closeness_both_ride_caps)
            best = min(by_order)
            close[i, j] = best
            if not math.isinf(best):
                order[i, j] = by_order.index(best)

    rel.setflags(write=False)
    close.setflags(write=False)
    order.setflags(write=False)
    table = MeasureTable(tuple(r.id for r in requests), rel, close, order,
                         _cap(rel, config.cap_factor), _cap(close, config.cap_factor))
    logger.debug("Measure table built for %d requests (rel cap %.4f, close cap %.1f)",
                 n, table.relatedness_cap, table.closeness_cap)
    return table


def _cap(matrix: np.ndarray, factor: float) -> float:
    finite = matrix[np.isfinite(matrix)]
    largest = float(finite.max()) if finite.size else 0.0
    return factor * largest if largest > 0 else 1.0


def proximity(instance: Instance, solution: Solution, a: int, table: MeasureTable) -> float:
    """prox_a：与其他路线上请求相关度的最小值；无其他路线请求时返回上限值"""
    members = solution.assignment(instance)
    others = [c for c, vehicle in members.items() if vehicle != members[a]]
    if not others:
        return table.relatedness_cap
    return min(table.rel(a, c) for c in others)


def interchangeability(instance: Instance, solution: Solution, a: int, table: MeasureTable) -> float:
    """int_a：与其他路线上请求紧密度的最小值；无其他路线请求时返回上限值"""
    members = solution.assignment(instance)
    others = [c for c, vehicle in members.items() if vehicle != members[a]]
    if not others:
        return table.closeness_cap
    return min(table.close(a, c) for c in others)
