#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
LP模型生成模块
将CDARP的混合整数规划模型输出为CPLEX LP文本格式，并读回外部求解器的结果
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from jinja2 import Environment, FileSystemLoader, Template

from model import BalanceSpec, Instance, LpParseError, Mode, ModelTooLargeError, compute_thresholds
from schedule import Route, Solution, make_solution

logger = logging.getLogger(__name__)

DEFAULT_MAX_VARIABLES = 200000
TERMS_PER_LINE = 8
INTEGRALITY_TOLERANCE = 1e-6


def x_name(i: int, j: int, k: int) -> str:
    return "x_{}_{}_{}".format(i, j, k)


def y_name(c: int, k: int) -> str:
    return "y_{}_{}".format(c, k)


def u_name(i: int, k: int) -> str:
    """节点i的服务开始时刻"""
    return "u_{}_{}".format(i, k)


def w_name(i: int, k: int) -> str:
    """离开节点i时的车上人数"""
    return "w_{}_{}".format(i, k)


def r_name(c: int, k: int) -> str:
    return "r_{}_{}".format(c, k)


def _number(value) -> str:
    if isinstance(value, float):
        return str(int(value)) if value.is_integer() else repr(value)
    return str(value)


def _expression(terms: Sequence[Tuple[float, str]]) -> str:
    parts = []
    for position, (coefficient, variable) in enumerate(terms):
        sign = "-" if coefficient < 0 else "+"
        magnitude = abs(coefficient)
        text = variable if magnitude == 1 else "{} {}".format(_number(magnitude), variable)
        if position == 0:
            parts.append(text if sign == "+" else "- " + text)
        else:
            parts.append("{} {}".format(sign, text))
    lines = [" ".join(parts[i:i + TERMS_PER_LINE]) for i in range(0, len(parts), TERMS_PER_LINE)]
    return "\n   ".join(lines)


@dataclass
class LpRow:
    name: str
    terms: List[Tuple[float, str]]
    sense: str
    rhs: float

    @property
    def expression(self) -> str:
        return _expression(self.terms)


@dataclass
class LpModel:
    """结构化的LP模型，渲染前可直接检查变量和约束"""
    objective: List[Tuple[float, str]] = field(default_factory=list)
    rows: List[LpRow] = field(default_factory=list)
    bounds: List[str] = field(default_factory=list)
    binaries: List[str] = field(default_factory=list)
    generals: List[str] = field(default_factory=list)
    continuous: List[str] = field(default_factory=list)

    @property
    def variables(self) -> List[str]:
        return self.binaries + self.generals + self.continuous

    def rows_named(self, prefix: str) -> List[LpRow]:
        return [row for row in self.rows if row.name.startswith(prefix + "_") or row.name == prefix]


class LpGenerator(object):
    """CDARP模型的LP文本生成器"""

    def __init__(self, instance: Instance, balance_spec: BalanceSpec,
                 max_variables: int = DEFAULT_MAX_VARIABLES):
        """
        初始化LP生成器

        Args:
            instance: 实例
            balance_spec: 协同模式及阈值，NC模式输出为UC模型加跨公司分配禁止约束
            max_variables: 变量数上限
        """
        self.instance = instance
        self.spec = balance_spec.for_instance(instance)
        self.max_variables = max_variables
        self.templates_dir = Path(__file__).parent / "templates" / "lp"
        self.env = Environment(
            loader=FileSystemLoader(str(self.templates_dir)),
            trim_blocks=True,
            lstrip_blocks=True
        )

    def _load_template(self, template_name: str) -> Template:
        try:
            return self.env.get_template(template_name)
        except Exception as e:
            raise FileNotFoundError(f"Template file not found: {template_name}, error: {e}")

    def variable_count(self) -> int:
        n_nodes = self.instance.node_count
        n_vehicles = len(self.instance.vehicles)
        n_requests = len(self.instance.requests)
        count = n_vehicles * (n_nodes * n_nodes + 2 * n_nodes + 2 * n_requests)
        if self.spec.mode.bounds_time:
            count += len(self.instance.companies)
        if self.spec.mode.bounds_customers:
            count += len(self.instance.companies)
        return count

    def build(self) -> LpModel:
        """
        构建模型

        Raises:
            ModelTooLargeError: 变量数超过上限
        """
        count = self.variable_count()
        if count > self.max_variables:
            raise ModelTooLargeError("Model needs {} variables, cap is {}".format(count, self.max_variables))

        instance = self.instance
        c = instance.cost_rows
        e, l, q = instance.earliest, instance.latest, instance.flow
        nodes = range(instance.node_count)
        lp = LpModel()

        for vehicle in instance.vehicles:
            k = vehicle.id
            for i in nodes:
                for j in nodes:
                    lp.objective.append((c[i][j], x_name(i, j, k)))
                    lp.binaries.append(x_name(i, j, k))

        for request in instance.requests:
            lp.rows.append(LpRow("assign_{}".format(request.id),
                                 [(1, y_name(request.id, v.id)) for v in instance.vehicles], "=", 1))
            for vehicle in instance.vehicles:
                lp.binaries.append(y_name(request.id, vehicle.id))

        for vehicle in instance.vehicles:
            self._vehicle_rows(lp, vehicle)

        for vehicle in instance.vehicles:
            k = vehicle.id
            for i in nodes:
                lp.continuous.append(u_name(i, k))
                lp.bounds.append("{} <= {} <= {}".format(e[i], u_name(i, k), l[i]))
            for i in nodes:
                lp.generals.append(w_name(i, k))
                lp.bounds.append("{} <= {} <= {}".format(
                    max(0, q[i]), w_name(i, k), min(vehicle.capacity, vehicle.capacity + q[i])))
            for request in instance.requests:
                lp.continuous.append(r_name(request.id, k))
                lp.bounds.append("{} <= {} <= {}".format(request.direct_time, r_name(request.id, k), request.max_ride))
            for i in nodes:
                lp.bounds.append("0 <= {} <= 0".format(x_name(i, i, k)))

        self._assignment_restrictions(lp)
        self._balance_rows(lp)
        logger.debug("LP model built: %d variables, %d rows", len(lp.variables), len(lp.rows))
        return lp

    def _vehicle_rows(self, lp: LpModel, vehicle):
        instance = self.instance
        t = instance.travel_rows
        e, l, s, q = instance.earliest, instance.latest, instance.service, instance.flow
        nodes = range(instance.node_count)
        k = vehicle.id
        start, end = vehicle.start_depot, vehicle.end_depot

        for request in instance.requests:
            y = y_name(request.id, k)
            for tag, node in (("pick", request.origin), ("drop", request.destination)):
                terms = [(1, x_name(node, j, k)) for j in nodes] + [(-1, y)]
                lp.rows.append(LpRow("{}_{}_{}".format(tag, request.id, k), terms, "=", 0))

        lp.rows.append(LpRow("out_{}".format(k), [(1, x_name(start, j, k)) for j in nodes], "=", 1))
        lp.rows.append(LpRow("in_{}".format(k), [(1, x_name(i, end, k)) for i in nodes], "=", 1))
        lp.rows.append(LpRow("noin_{}".format(k), [(1, x_name(i, start, k)) for i in nodes], "=", 0))
        lp.rows.append(LpRow("noout_{}".format(k), [(1, x_name(end, j, k)) for j in nodes], "=", 0))
        for company in instance.companies:
            if company.id == vehicle.owner:
                continue
            for depot in (company.start_depot, company.end_depot):
                lp.rows.append(LpRow("foreign_{}_{}".format(depot, k), [(1, x_name(depot, j, k)) for j in nodes], "=", 0))
        for i in nodes:
            if i in (start, end):
                continue
            terms = [(1, x_name(j, i, k)) for j in nodes if j != i] + [(-1, x_name(i, j, k)) for j in nodes if j != i]
            lp.rows.append(LpRow("flow_{}_{}".format(i, k), terms, "=", 0))

        for i in nodes:
            for j in nodes:
                if i == j:
                    continue
                # U_ij = max{0, l_i + s_i + t_ij - e_j}
                big_m = max(0, l[i] + s[i] + t[i][j] - e[j])
                lp.rows.append(LpRow("time_{}_{}_{}".format(i, j, k),
                                     [(1, u_name(j, k)), (-1, u_name(i, k)), (-big_m, x_name(i, j, k))]
                                     if big_m else [(1, u_name(j, k)), (-1, u_name(i, k))],
                                     ">=", s[i] + t[i][j] - big_m))
        for i in nodes:
            for j in nodes:
                if i == j:
                    continue
                # W_ij = min{Q_k, Q_k + q_i}
                big_w = min(vehicle.capacity, vehicle.capacity + q[i])
                lp.rows.append(LpRow("load_{}_{}_{}".format(i, j, k),
                                     [(1, w_name(j, k)), (-1, w_name(i, k)), (-big_w, x_name(i, j, k))]
                                     if big_w else [(1, w_name(j, k)), (-1, w_name(i, k))],
                                     ">=", q[j] - big_w))
        lp.rows.append(LpRow("load0_{}".format(k), [(1, w_name(start, k))], "=", 0))

        for request in instance.requests:
            lp.rows.append(LpRow("ride_{}_{}".format(request.id, k),
                                 [(1, r_name(request.id, k)), (-1, u_name(request.destination, k)),
                                  (1, u_name(request.origin, k))], "=", -s[request.origin]))
        lp.rows.append(LpRow("dur_{}".format(k), [(1, u_name(end, k)), (-1, u_name(start, k))],
                             "<=", vehicle.max_duration + s[start]))

    def _assignment_restrictions(self, lp: LpModel):
        for request in self.instance.requests:
            for vehicle in self.instance.vehicles:
                y = y_name(request.id, vehicle.id)
                if self.spec.mode == Mode.NC and vehicle.owner != request.owner:
                    lp.rows.append(LpRow("nc_{}_{}".format(request.id, vehicle.id), [(1, y)], "=", 0))
                elif not request.lock.allows(vehicle.owner, request.owner):
                    lp.rows.append(LpRow("lock_{}_{}".format(request.id, vehicle.id), [(1, y)], "=", 0))

    def _balance_terms(self, company_id: int, weight) -> List[Tuple[float, str]]:
        terms = []
        for request in self.instance.requests:
            for vehicle in self.instance.vehicles:
                if vehicle.owner == request.owner:
                    continue
                if vehicle.owner == company_id:
                    terms.append((weight(request), y_name(request.id, vehicle.id)))
                elif request.owner == company_id:
                    terms.append((-weight(request), y_name(request.id, vehicle.id)))
        return terms

    def _balance_rows(self, lp: LpModel):
        mode = self.spec.mode
        if not (mode.bounds_time or mode.bounds_customers):
            return
        thresholds = compute_thresholds(self.instance, self.spec)
        blocks = []
        if mode.bounds_time:
            blocks.append(("S", lambda r: r.direct_time, self.spec.time_offset, 0, lp.continuous))
        if mode.bounds_customers:
            blocks.append(("U", lambda r: r.passengers, self.spec.customer_offset, 1, lp.generals))
        for tag, weight, offset, which, declared in blocks:
            for company in self.instance.companies:
                m = company.id
                variable = "{}_{}".format(tag, m)
                declared.append(variable)
                lp.bounds.append("{} free".format(variable))
                terms = [(1, variable)] + [(-a, name) for a, name in self._balance_terms(m, weight)]
                lp.rows.append(LpRow("{}def_{}".format(tag, m), terms, "=", 0))
                limit = thresholds[m][which]
                lp.rows.append(LpRow("{}up_{}".format(tag, m), [(1, variable)], "<=", limit - offset(m)))
                lp.rows.append(LpRow("{}lo_{}".format(tag, m), [(-1, variable)], "<=", limit + offset(m)))

    def render(self, lp: Optional[LpModel] = None) -> str:
        lp = lp or self.build()
        template = self._load_template("cdarp_model.lp")
        return template.render(
            mode=self.spec.mode.value,
            n_companies=len(self.instance.companies),
            n_vehicles=len(self.instance.vehicles),
            n_requests=len(self.instance.requests),
            n_variables=len(lp.variables),
            objective=_expression(lp.objective),
            rows=[{"name": row.name, "expression": row.expression, "sense": row.sense, "rhs": _number(row.rhs)}
                  for row in lp.rows],
            bounds=lp.bounds,
            generals=_chunks(lp.generals),
            binaries=_chunks(lp.binaries),
        )

    def save(self, output_file: str) -> str:
        output_path = Path(output_file)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        with open(output_path, "w", encoding="utf-8") as f:
            f.write(self.render())
        return str(output_path)


def _chunks(names: List[str]) -> List[str]:
    return [" ".join(names[i:i + TERMS_PER_LINE]) for i in range(0, len(names), TERMS_PER_LINE)]


def export_lp(instance: Instance, balance_spec: BalanceSpec, max_variables: int = DEFAULT_MAX_VARIABLES) -> str:
    """输出LP文本"""
    return LpGenerator(instance, balance_spec, max_variables).render()


def parse_solution_values(text: str) -> Tuple[Dict[str, float], Optional[float]]:
    """
    解析外部求解器结果

    接受每行 `名称 数值` 的列表、`objective 数值` 行，以及cbc的
    `序号 名称 数值 约减成本` 行和 `Optimal - objective value X` 表头。

    Returns:
        (变量取值, 目标值或None)
    """
    values: Dict[str, float] = {}
    objective = None
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith("\\"):
            continue
        if "objective value" in line.lower():
            try:
                objective = float(line.split()[-1])
            except ValueError:
                raise LpParseError("Line {}: cannot read objective from '{}'".format(number, line))
            continue
        tokens = line.split()
        if tokens[0].startswith("**"):
            tokens = tokens[1:]
        try:
            if len(tokens) == 2:
                name, value = tokens[0], float(tokens[1])
            elif len(tokens) == 4 and tokens[0].isdigit():
                name, value = tokens[1], float(tokens[2])
            else:
                raise ValueError("unexpected token count {}".format(len(tokens)))
        except ValueError as e:
            raise LpParseError("Line {}: {} in '{}'".format(number, e, line))
        if name.lower() in ("objective", "obj"):
            objective = value
        else:
            values[name] = value
    return values, objective


def import_solution(text: str, instance: Instance) -> Solution:
    """
    由外部求解器结果重建解

    从每辆车的起点车场沿 x=1 的弧走到终点车场；只含车场的零成本环被忽略。

    Raises:
        LpParseError: x取分数值、弧不连通、变量名不属于实例，或报告的目标值与重算成本不符
    """
    values, objective = parse_solution_values(text)
    vehicles = {v.id: v for v in instance.vehicles}
    depots = set()
    for company in instance.companies:
        depots.update((company.start_depot, company.end_depot))

    arcs: Dict[int, Dict[int, int]] = {k: {} for k in vehicles}
    for name, value in values.items():
        if not name.startswith("x_"):
            continue
        rounded = round(value)
        if abs(value - rounded) > INTEGRALITY_TOLERANCE:
            raise LpParseError("Fractional value {} for {}".format(value, name))
        if rounded == 0:
            continue
        try:
            _, i, j, k = name.split("_")
            i, j, k = int(i), int(j), int(k)
        except ValueError:
            raise LpParseError("Malformed arc variable name: {}".format(name))
        if k not in arcs or not (0 <= i < instance.node_count and 0 <= j < instance.node_count):
            raise LpParseError("Arc variable {} does not belong to the instance".format(name))
        if i in arcs[k]:
            raise LpParseError("Vehicle {} leaves node {} twice".format(k, i))
        arcs[k][i] = j

    routes = []
    for k, vehicle in vehicles.items():
        successors = dict(arcs[k])
        visits = []
        node = vehicle.start_depot
        while node != vehicle.end_depot:
            if node not in successors:
                raise LpParseError("Vehicle {}: route from depot {} is disconnected at node {}".format(
                    k, vehicle.start_depot, node))
            nxt = successors.pop(node)
            if nxt != vehicle.end_depot:
                visits.append(nxt)
            node = nxt
            if len(visits) > instance.node_count:
                raise LpParseError("Vehicle {}: route does not reach its end depot".format(k))
        leftover = [i for i, j in successors.items() if i not in depots or j not in depots]
        if leftover:
            raise LpParseError("Vehicle {}: arcs leaving nodes {} are disconnected from the route".format(
                k, sorted(leftover)))
        routes.append(Route(k, tuple(visits)))

    solution = make_solution(instance, routes)
    if objective is not None and abs(objective - solution.cost) > INTEGRALITY_TOLERANCE:
        raise LpParseError("Reported objective {} differs from recomputed route cost {}".format(
            _number(objective), solution.cost))
    return solution
