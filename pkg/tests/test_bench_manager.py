#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
测试求解、批量实验和多日记忆链命令
"""

import json
import math
import sys
from pathlib import Path

import pandas as pd
import pytest

# 添加项目根目录到Python路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

import bench_manager
import main
from bench_manager import BenchManager, balance_statistics, next_offsets, read_offsets
from instance_factory import swap_instance
from instance_generator import generate, write_instance
from model import BalanceSpec, InfeasibleModelError, Lock, LockKind, Mode
from schedule import Route, make_solution, write_solution

QUICK_PARAMS = "alns:\n  t_max: 10.0\n  gamma: 0.5\n"


@pytest.fixture
def workspace(tmp_path):
    params = tmp_path / "params.yaml"
    params.write_text(QUICK_PARAMS)
    instance_path = write_instance(swap_instance(), tmp_path / "swap.json")
    return tmp_path, str(params), instance_path


def test_balance_statistics_and_offsets():
    instance = swap_instance()
    swap = make_solution(instance, [Route(1, (5, 7)), Route(2, (4, 6))])
    assert balance_statistics(swap) == {"S_bar": 20.0, "U_bar": 0.0, "S_hat": 20.0, "U_hat": 0.0}

    spec = BalanceSpec(Mode.T, alpha_t=1.0, time_offsets={1: 5, 2: -5})
    assert next_offsets(swap, spec, accumulate=False) == ({1: -20, 2: 20}, {1: 0, 2: 0})
    assert next_offsets(swap, spec, accumulate=True) == ({1: -15, 2: 15}, {1: 0, 2: 0})


def test_offsets_from_previous_solution(tmp_path):
    instance = swap_instance()
    swap = make_solution(instance, [Route(1, (5, 7)), Route(2, (4, 6))])
    spec = BalanceSpec(Mode.T, alpha_t=1.0, time_offsets={1: 5, 2: -5})
    path = write_solution(tmp_path / "day1.solution.json", instance, swap, spec)
    assert read_offsets(path) == ({1: -20, 2: 20}, {1: 0, 2: 0})
    assert read_offsets(path, accumulate=True) == ({1: -15, 2: 15}, {1: 0, 2: 0})

    explicit = tmp_path / "offsets.json"
    explicit.write_text('{"time_offsets": {"2": 10}}')
    assert read_offsets(str(explicit)) == ({2: 10}, {})


def test_solve_with_oracle(workspace):
    tmp_path, params, instance_path = workspace
    manager = BenchManager(params)
    spec = manager.executor.balance_spec(Mode.UC)
    outcome = manager.cmd_solve(instance_path, spec, backend="oracle", out_dir=str(tmp_path / "out"))
    assert outcome.cost == 120
    assert outcome.nc_cost == 480
    assert outcome.sav == pytest.approx(75.0)
    assert outcome.gap == 0.0
    assert (tmp_path / "out" / "swap_uc.solution.json").exists()


def test_solve_with_alns_writes_trace(workspace):
    tmp_path, params, instance_path = workspace
    manager = BenchManager(params)
    spec = manager.executor.balance_spec(Mode.T, alpha_t=1.0)
    outcome = manager.cmd_solve(instance_path, spec, out_dir=str(tmp_path / "out"))
    assert outcome.cost == 120
    assert outcome.statistics.iterations == 4
    trace = pd.read_csv(tmp_path / "out" / "swap_t.trace.csv")
    assert list(trace.columns) == ["iteration", "best_cost", "current_cost", "q"]
    hits = pd.read_csv(tmp_path / "out" / "swap_t.hits.csv")
    assert len(hits) == 11


def test_benchmark_reports(workspace):
    tmp_path, params, instance_path = workspace
    manager = BenchManager(params)
    out = tmp_path / "bench"
    report = manager.cmd_benchmark([instance_path], ["tc", "nc", "uc"], [0.5, 1.0], [0], out_dir=str(out))
    assert list(report["mode"]) == ["NC", "UC", "TC", "TC"]
    assert list(report["status"]) == ["ok"] * 4
    assert list(report["cost"]) == [480, 120, 480, 120]
    assert math.isnan(report["alpha"].iloc[0])
    assert list(report["alpha"].iloc[2:]) == [0.5, 1.0]

    written = pd.read_csv(out / "report.csv")
    assert list(written.columns) == bench_manager.REPORT_COLUMNS
    assert list(written["sav"]) == pytest.approx([0.0, 75.0, 0.0, 75.0])
    assert list(written["gap"]) == pytest.approx([0.0, 0.0, 0.0, 0.0])

    summary = pd.read_csv(out / "summary.csv")
    assert list(summary["mode"]) == ["NC", "UC", "TC", "TC"]
    assert list(summary["at_optimum"]) == pytest.approx([1.0] * 4)

    ranking = pd.read_csv(out / "ranking_destroy.csv")
    assert set(ranking["mode"]) == {"NC", "UC", "TC"}
    assert list(ranking[ranking["mode"] == "NC"]["rank"]) == ["I", "II", "III", "IV", "V", "VI"]
    for name in ("ranking_repair.csv", "timings.csv", "traces.csv"):
        assert (out / name).exists()


def test_benchmark_records_failures(workspace):
    tmp_path, params, instance_path = workspace
    manager = BenchManager(params)
    missing = str(tmp_path / "missing.json")
    report = manager.cmd_benchmark([instance_path, missing], ["uc"], [], [0], out_dir=str(tmp_path / "bench"))
    assert list(report["instance"]) == ["missing", "swap"]
    assert report["status"].iloc[0].startswith("error:")
    assert report["status"].iloc[1] == "ok"


def test_multiday_chain(workspace):
    tmp_path, params, instance_path = workspace
    manager = BenchManager(params)
    spec = manager.executor.balance_spec(Mode.T, alpha_t=1.0)
    frame = manager.cmd_multiday([instance_path, instance_path], spec, backend="oracle",
                                 out_dir=str(tmp_path / "chain"))
    assert list(frame["cost"]) == [120, 120, 280, 280]
    day2 = frame[frame["day"] == 2].set_index("company")
    # 第二天的偏移量等于第一天的平衡量
    assert list(day2["S_offset"]) == [-20, 20]
    assert list(day2["S"]) == [20, -20]
    assert list(day2["S_total"]) == [0, 0]
    assert (tmp_path / "chain" / "multiday.csv").exists()
    assert (tmp_path / "chain" / "day02_swap.solution.json").exists()


def test_multiday_reports_partial_chain(workspace):
    tmp_path, params, instance_path = workspace
    manager = BenchManager(params)
    spec = manager.executor.balance_spec(Mode.T, alpha_t=0.0, time_offsets={1: 5})
    with pytest.raises(InfeasibleModelError):
        manager.cmd_multiday([instance_path], spec, backend="oracle", out_dir=str(tmp_path / "chain"))
    assert pd.read_csv(tmp_path / "chain" / "multiday.csv").empty


def test_alpha_is_required_for_balanced_modes(workspace):
    tmp_path, params, instance_path = workspace
    manager = BenchManager(params)
    args = main.build_parser().parse_args(["solve", "--instance", instance_path, "--mode", "t"])
    with pytest.raises(ValueError):
        manager.spec_from_args(args)
    args = main.build_parser().parse_args(["solve", "--instance", instance_path, "--mode", "tc",
                                           "--alpha", "0.2", "--alpha-c", "0.4"])
    spec = manager.spec_from_args(args)
    assert (spec.mode, spec.alpha_t, spec.alpha_c) == (Mode.TC, 0.2, 0.4)


def test_exit_codes(workspace):
    tmp_path, params, instance_path = workspace
    parser = main.build_parser()

    args = parser.parse_args(["solve", "--instance", str(tmp_path / "missing.json"), "--out", str(tmp_path)])
    with pytest.raises(SystemExit) as info:
        bench_manager.handle_bench_command(args)
    assert info.value.code == bench_manager.EXIT_IO

    locked = write_instance(swap_instance(locks={1: Lock(LockKind.DENYLIST, (1, 2))}), tmp_path / "locked.json")
    args = parser.parse_args(["solve", "--instance", locked, "--backend", "oracle", "--out", str(tmp_path)])
    with pytest.raises(SystemExit) as info:
        bench_manager.handle_bench_command(args)
    assert info.value.code == bench_manager.EXIT_INFEASIBLE

    broken = tmp_path / "broken.solution.json"
    broken.write_text(json.dumps({"routes": [{"visits": [4, 6]}]}))
    args = parser.parse_args(["validate", "--instance", instance_path, "--solution", str(broken)])
    with pytest.raises(SystemExit) as info:
        bench_manager.handle_bench_command(args)
    assert info.value.code == bench_manager.EXIT_IO


def test_instance_commands(workspace):
    tmp_path, params, instance_path = workspace
    manager = BenchManager(params)
    paths = manager.cmd_generate("A", [3, 4], str(tmp_path / "generated"))
    assert [Path(p).name for p in paths] == ["A_0003.json", "A_0004.json"]
    assert manager.cmd_validate(paths[0])

    lp_path = manager.cmd_export_lp(instance_path, BalanceSpec(Mode.UC), str(tmp_path / "swap.lp"))
    assert Path(lp_path).read_text().startswith("\\ Collaborative dial-a-ride model")

    csv_path = manager.cmd_dump_measures(instance_path, str(tmp_path / "measures.csv"))
    assert len(pd.read_csv(csv_path)) == 2


def test_validate_checks_solution_file(workspace):
    tmp_path, params, instance_path = workspace
    manager = BenchManager(params)
    instance = swap_instance()
    swap = make_solution(instance, [Route(1, (5, 7)), Route(2, (4, 6))])
    solution_path = write_solution(tmp_path / "swap.solution.json", instance, swap, BalanceSpec(Mode.UC))
    assert manager.cmd_validate(instance_path, solution_path)
    assert not manager.cmd_validate(instance_path, solution_path, BalanceSpec(Mode.NC))


def test_benchmark_records_operator_pool(tmp_path):
    params = tmp_path / "ablation.yaml"
    params.write_text(QUICK_PARAMS + "  destroy_operators: [random, worst]\n  repair_operators: [best]\n")
    instance_path = write_instance(swap_instance(), tmp_path / "swap.json")
    manager = BenchManager(str(params))
    out = tmp_path / "bench"
    report = manager.cmd_benchmark([instance_path], ["uc"], [], [0], out_dir=str(out))
    assert list(report["destroy_pool"]) == ["random+worst"]
    assert list(report["repair_pool"]) == ["best"]
    assert report["d_closeness"].isna().all()
    assert int(report["d_random"].iloc[0] + report["d_worst"].iloc[0]) == int(report["improvements"].iloc[0])

    ranking = pd.read_csv(out / "ranking_destroy.csv")
    assert sorted(ranking["operator"]) == ["random", "worst"]
    assert list(pd.read_csv(out / "ranking_repair.csv")["operator"]) == ["best"]


@pytest.mark.parametrize("backend", ["oracle", "alns"])
def test_week_of_chained_balances(workspace, backend):
    tmp_path, params, instance_path = workspace
    manager = BenchManager(params)
    spec = manager.executor.balance_spec(Mode.T, alpha_t=1.0)
    frame = manager.cmd_multiday([instance_path] * 7, spec, backend=backend, out_dir=str(tmp_path / "week"))
    assert sorted(set(frame["day"])) == list(range(1, 8))

    thresholds = {1: 40, 2: 20}
    previous = {1: 0, 2: 0}
    for day in range(1, 8):
        rows = frame[frame["day"] == day].set_index("company")
        for company in (1, 2):
            assert rows.loc[company, "S_offset"] == previous[company]
            assert abs(rows.loc[company, "S_total"]) <= thresholds[company]
        previous = {company: int(rows.loc[company, "S"]) for company in (1, 2)}
    if backend == "oracle":
        assert list(frame.drop_duplicates("day")["cost"]) == [120, 280, 120, 280, 120, 280, 120]
    assert (tmp_path / "week" / "day07_swap.solution.json").exists()


def test_collaboration_savings_on_a_batch(tmp_path, capsys):
    manager = BenchManager()
    paths = [write_instance(generate("custom", seed, companies=2, requests_per_company=2),
                            tmp_path / "custom_{:02d}.json".format(seed)) for seed in range(28)]
    report = manager.cmd_benchmark(paths, ["uc", "t", "c", "tc"], [0.3], [0], backend="oracle",
                                   out_dir=str(tmp_path / "bench"), workers=1)
    assert list(report["status"]) == ["ok"] * len(report)
    assert (report["sav"] >= 0).all()

    sav = report.pivot(index="instance", columns="mode", values="sav")
    assert (sav["TC"] <= sav["T"]).all()
    assert (sav["TC"] <= sav["C"]).all()
    assert (sav["T"] <= sav["UC"]).all()
    assert (sav["C"] <= sav["UC"]).all()
    assert sav["UC"].mean() > 0
    with capsys.disabled():
        print("\nMean SAV over {} instances: {}".format(len(sav), sav.mean().round(2).to_dict()))
