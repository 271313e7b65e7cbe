#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
测试LP模型导出和外部求解器结果导入
"""

import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

import pytest

# 添加项目根目录到Python路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from instance_factory import single_request_instance, swap_instance
from lp_generator import LpGenerator, export_lp, import_solution, parse_solution_values
from model import BalanceSpec, LpParseError, Mode, ModelTooLargeError

SWAP_VALUES = """
x_0_5_1 1
x_5_7_1 1
x_7_2_1 1
x_1_4_2 1
x_4_6_2 1
x_6_3_2 1
x_0_4_1 0
y_2_1 1
y_1_2 1
objective 120
"""


def test_single_request_model_size():
    instance = single_request_instance()
    generator = LpGenerator(instance, BalanceSpec(Mode.UC))
    lp = generator.build()
    assert len([name for name in lp.binaries if name.startswith("x_")]) == 16
    assert [name for name in lp.binaries if name.startswith("y_")] == ["y_1_1"]
    assert generator.variable_count() == len(lp.variables) == 26
    assert [row.name for row in lp.rows_named("assign")] == ["assign_1"]


def test_time_and_load_variables():
    lp = LpGenerator(single_request_instance(), BalanceSpec(Mode.UC)).build()
    # u 为服务开始时刻，取值范围为节点时间窗
    assert "u_2_1" in lp.continuous
    assert "0 <= u_2_1 <= 10000" in lp.bounds
    assert "0 <= u_3_1 <= 10000" in lp.bounds
    # w 为离开节点时的车上人数，整数
    assert "w_2_1" in lp.generals
    assert "1 <= w_2_1 <= 3" in lp.bounds
    assert "0 <= w_3_1 <= 2" in lp.bounds
    assert not [name for name in lp.generals if name.startswith("u_")]

    start_load = lp.rows_named("load0")[0]
    assert (start_load.expression, start_load.sense, start_load.rhs) == ("w_0_1", "=", 0)
    assert lp.rows_named("time_2_3")[0].expression == "u_3_1 - u_2_1 - 10020 x_2_3_1"
    assert lp.rows_named("load_2_3")[0].expression == "w_3_1 - w_2_1 - 3 x_2_3_1"
    assert lp.rows_named("ride_1")[0].expression == "r_1_1 - u_3_1 + u_2_1"
    assert lp.rows_named("dur")[0].expression == "u_1_1 - u_0_1"


def test_rendered_sections():
    text = export_lp(single_request_instance(), BalanceSpec(Mode.UC))
    lines = text.splitlines()
    for section in ("Minimize", "Subject To", "Bounds", "Generals", "Binaries", "End"):
        assert section in lines
    assert " assign_1: y_1_1 = 1" in lines
    assert " out_1: x_0_0_1 + x_0_1_1 + x_0_2_1 + x_0_3_1 = 1" in lines
    assert " 0 <= x_1_1_1 <= 0" in lines


def test_balance_rows():
    instance = swap_instance()
    lp = LpGenerator(instance, BalanceSpec(Mode.T, alpha_t=0.5, time_offsets={1: 5})).build()
    definition = lp.rows_named("Sdef")[0]
    assert definition.expression == "S_1 + 40 y_1_2 - 20 y_2_1"
    upper = lp.rows_named("Sup")[0]
    lower = lp.rows_named("Slo")[0]
    assert (upper.sense, upper.rhs) == ("<=", 15.0)
    assert (lower.sense, lower.rhs) == ("<=", 25.0)
    assert "S_1 free" in lp.bounds
    assert not lp.rows_named("Udef")


def test_nc_and_lock_restrictions():
    instance = swap_instance()
    lp = LpGenerator(instance, BalanceSpec(Mode.NC)).build()
    assert sorted(row.name for row in lp.rows if row.name.startswith("nc_")) == ["nc_1_2", "nc_2_1"]
    # 车辆1不得使用公司2的车场
    assert lp.rows_named("foreign_1")[0].name == "foreign_1_1"


def test_model_too_large():
    generator = LpGenerator(swap_instance(), BalanceSpec(Mode.UC), max_variables=10)
    with pytest.raises(ModelTooLargeError):
        generator.build()


def test_parse_cbc_output():
    values, objective = parse_solution_values(
        "Optimal - objective value 120.00000000\n"
        "      0 x_0_5_1                 1                       0\n"
        "**    1 y_2_1                   1                       0\n"
    )
    assert objective == 120.0
    assert values == {"x_0_5_1": 1.0, "y_2_1": 1.0}
    with pytest.raises(LpParseError):
        parse_solution_values("x_0_5_1 one\n")


def test_import_solution():
    instance = swap_instance()
    solution = import_solution(SWAP_VALUES, instance)
    assert solution.cost == 120
    assert solution.route_of(1).visits == (5, 7)
    assert solution.route_of(2).visits == (4, 6)
    assert solution.time_balance == {1: -20, 2: 20}


def test_import_rejects_bad_values():
    instance = swap_instance()
    with pytest.raises(LpParseError):
        import_solution(SWAP_VALUES.replace("x_5_7_1 1", "x_5_7_1 0.5"), instance)
    with pytest.raises(LpParseError):
        import_solution("x_0_5_1 1\nx_1_4_2 1\nx_4_6_2 1\nx_6_3_2 1\n", instance)
    with pytest.raises(LpParseError) as info:
        import_solution(SWAP_VALUES.replace("objective 120", "objective 130"), instance)
    assert "objective 130 differs from recomputed route cost 120" in str(info.value)


@pytest.mark.skipif(shutil.which("cbc") is None, reason="cbc not installed")
def test_cbc_agrees_with_enumeration():
    from exact_oracle import solve_exact
    instance = swap_instance()
    spec = BalanceSpec(Mode.T, alpha_t=1.0, time_offsets={2: 10})
    with tempfile.TemporaryDirectory() as temp_dir:
        model_path = LpGenerator(instance, spec).save(str(Path(temp_dir) / "model.lp"))
        values_path = Path(temp_dir) / "values.txt"
        subprocess.run(["cbc", model_path, "solve", "solu", str(values_path)], check=True,
                       stdout=subprocess.DEVNULL)
        solution = import_solution(values_path.read_text(), instance)
    assert solution.cost == solve_exact(instance, spec).cost == 280
