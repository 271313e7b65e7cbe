#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
实验管理器模块
提供单实例求解、批量实验、多日记忆链以及实例和模型工具命令
"""

import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

# 添加当前目录到Python路径
sys.path.insert(0, str(Path(__file__).parent))

import config
from alns import DESTROY_OPERATORS, REPAIR_OPERATORS, ROMAN
from instance_generator import generate, read_instance, write_instance
from lp_generator import LpGenerator, import_solution
from model import (CdarpError, InfeasibleModelError, InfeasibleSolutionError, Instance,
                   InstanceFormatError, LpParseError, Mode, validate_instance)
from schedule import Solution, check_solution, read_solution, write_solution
from solver import BACKENDS, SolveOutcome, SolverExecutor, percent

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INFEASIBLE = 2
EXIT_IO = 3

MODE_ORDER = [mode.value for mode in Mode]

REPORT_COLUMNS = (
    ["instance", "mode", "alpha", "seed", "backend", "status", "cost", "nc_cost", "sav", "optimum", "gap",
     "S_bar", "U_bar", "S_hat", "U_hat", "iterations", "improvements", "destroy_pool", "repair_pool"]
    + ["d_{}".format(op) for op in DESTROY_OPERATORS]
    + ["r_{}".format(op) for op in REPAIR_OPERATORS]
)


def _exit_code(error: BaseException) -> int:
    if isinstance(error, (InfeasibleModelError, InfeasibleSolutionError)):
        return EXIT_INFEASIBLE
    if isinstance(error, (OSError, InstanceFormatError, LpParseError)):
        return EXIT_IO
    return EXIT_FAILURE


def _csv_list(text: str, cast=str) -> List:
    return [cast(item.strip()) for item in text.split(",") if item.strip()]


def _add_balance_arguments(parser, mode_default="uc"):
    parser.add_argument('--mode', default=mode_default, choices=['nc', 'uc', 't', 'c', 'tc'],
                        help='Collaboration mode (default: {})'.format(mode_default))
    parser.add_argument('--alpha', type=float, help='Balance percentage for both time and customers')
    parser.add_argument('--alpha-t', type=float, help='Time balance percentage (overrides --alpha)')
    parser.add_argument('--alpha-c', type=float, help='Customer balance percentage (overrides --alpha)')
    parser.add_argument('--offsets', help='Offsets file: a previous solution file or {"time_offsets": .., "customer_offsets": ..}')
    parser.add_argument('--accumulate', action='store_true',
                        help='Add the previous offsets to the previous balances (cumulative ledger)')


def _add_solver_arguments(parser):
    parser.add_argument('--params', help='ALNS parameter file (YAML, "alns" section)')
    parser.add_argument('--backend', default='alns', choices=list(BACKENDS), help='Solver backend (default: alns)')
    parser.add_argument('--seed', type=int, default=0, help='Random seed (default: 0)')
    parser.add_argument('--out', default='./results', help='Output directory (default: ./results)')


def register_bench_commands(subparsers):
    """
    添加求解和实验命令

    Args:
        subparsers: 子命令解析器
    """
    solve_parser = subparsers.add_parser('solve', help='Solve one instance in one collaboration mode')
    solve_parser.add_argument('--instance', required=True, help='Instance file path')
    _add_balance_arguments(solve_parser)
    _add_solver_arguments(solve_parser)
    solve_parser.add_argument('--no-reference', action='store_true',
                              help='Skip the NC reference solve (no SAV) and the oracle GAP reference')

    bench_parser = subparsers.add_parser('benchmark', help='Run an experiment matrix and write CSV reports')
    bench_parser.add_argument('--instances', nargs='+', required=True, help='Instance file paths')
    bench_parser.add_argument('--modes', default='nc,uc,t,c,tc', help='Comma separated modes (default: all)')
    bench_parser.add_argument('--alphas', default='0.1,0.2,0.3', help='Comma separated balance percentages')
    bench_parser.add_argument('--seeds', default='0', help='Comma separated seeds (default: 0)')
    bench_parser.add_argument('--workers', type=int, help='Parallel worker processes (default: from config)')
    _add_solver_arguments(bench_parser)

    multiday_parser = subparsers.add_parser('multiday', help='Chain balance memory over consecutive days')
    multiday_parser.add_argument('--instances', nargs='+', required=True, help='One instance file per day, in order')
    _add_balance_arguments(multiday_parser, mode_default='t')
    _add_solver_arguments(multiday_parser)

    generate_parser = subparsers.add_parser('generate', help='Generate synthetic instances')
    generate_parser.add_argument('--group', default='A', choices=['A', 'B', 'C', 'D', 'custom'], help='Size group')
    generate_parser.add_argument('--seeds', default='0', help='Comma separated seeds (default: 0)')
    generate_parser.add_argument('--companies', type=int, help='Companies (custom group)')
    generate_parser.add_argument('--requests-per-company', type=int, help='Requests per company (custom group)')
    generate_parser.add_argument('--generator-params', help='Generator parameter file (YAML, "generator" section)')
    generate_parser.add_argument('--out', default='./instances', help='Output directory (default: ./instances)')

    validate_parser = subparsers.add_parser('validate', help='Print the validation report of an instance')
    validate_parser.add_argument('--instance', required=True, help='Instance file path')
    validate_parser.add_argument('--solution', help='Also check a solution file against the instance')
    _add_balance_arguments(validate_parser)

    export_parser = subparsers.add_parser('export-lp', help='Write the MILP model in LP format')
    export_parser.add_argument('--instance', required=True, help='Instance file path')
    _add_balance_arguments(export_parser)
    export_parser.add_argument('--out', required=True, help='LP file path')

    import_parser = subparsers.add_parser('import-solution', help='Rebuild a solution from external solver values')
    import_parser.add_argument('--instance', required=True, help='Instance file path')
    import_parser.add_argument('--values', required=True, help='Solver output with "name value" pairs')
    _add_balance_arguments(import_parser)
    import_parser.add_argument('--out', required=True, help='Solution file path')

    measures_parser = subparsers.add_parser('dump-measures', help='Write the relatedness/closeness table as CSV')
    measures_parser.add_argument('--instance', required=True, help='Instance file path')
    measures_parser.add_argument('--out', required=True, help='CSV file path')


BENCH_COMMANDS = ('solve', 'benchmark', 'multiday', 'generate', 'validate', 'export-lp',
                  'import-solution', 'dump-measures')


def handle_bench_command(args):
    """
    处理求解和实验命令，按异常类型设置退出码

    Args:
        args: 解析后的命令行参数
    """
    try:
        manager = BenchManager(getattr(args, 'params', None), getattr(args, 'generator_params', None))
        if args.command == 'solve':
            manager.cmd_solve(args.instance, manager.spec_from_args(args), args.backend, args.seed, args.out,
                              reference=not args.no_reference)
        elif args.command == 'benchmark':
            manager.cmd_benchmark(args.instances, _csv_list(args.modes), _csv_list(args.alphas, float),
                                  _csv_list(args.seeds, int), args.backend, args.out, args.workers)
        elif args.command == 'multiday':
            manager.cmd_multiday(args.instances, manager.spec_from_args(args), args.backend, args.seed, args.out,
                                 accumulate=args.accumulate)
        elif args.command == 'generate':
            manager.cmd_generate(args.group, _csv_list(args.seeds, int), args.out,
                                 args.companies, args.requests_per_company)
        elif args.command == 'validate':
            if not manager.cmd_validate(args.instance, args.solution, manager.spec_from_args(args)):
                sys.exit(EXIT_FAILURE)
        elif args.command == 'export-lp':
            manager.cmd_export_lp(args.instance, manager.spec_from_args(args), args.out)
        elif args.command == 'import-solution':
            if not manager.cmd_import_solution(args.instance, args.values, manager.spec_from_args(args), args.out):
                sys.exit(EXIT_INFEASIBLE)
        elif args.command == 'dump-measures':
            manager.cmd_dump_measures(args.instance, args.out)
    except KeyboardInterrupt:
        print("\nUser interrupted operation")
        sys.exit(EXIT_FAILURE)
    except Exception as e:
        print("Command failed: {}".format(e))
        sys.exit(_exit_code(e))


def read_offsets(path: str, accumulate: bool = False) -> Tuple[Dict[int, int], Dict[int, int]]:
    """
    读取偏移量文件

    接受前一日的解文件（取其 S、U；accumulate 时再加上其偏移量）或显式的
    {"time_offsets": {公司: 值}, "customer_offsets": {公司: 值}}。
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise InstanceFormatError("Offsets file {} line {}: {}".format(path, e.lineno, e.msg))
    if "balances" in data:
        time_offsets, customer_offsets = {}, {}
        for company, entry in data["balances"].items():
            time_offsets[int(company)] = int(entry["S"]) + (int(entry.get("S_offset", 0)) if accumulate else 0)
            customer_offsets[int(company)] = int(entry["U"]) + (int(entry.get("U_offset", 0)) if accumulate else 0)
        return time_offsets, customer_offsets
    if "time_offsets" in data or "customer_offsets" in data:
        return ({int(k): int(v) for k, v in data.get("time_offsets", {}).items()},
                {int(k): int(v) for k, v in data.get("customer_offsets", {}).items()})
    raise InstanceFormatError("Offsets file {} has neither 'balances' nor 'time_offsets'/'customer_offsets'".format(path))


def next_offsets(solution: Solution, spec, accumulate: bool) -> Tuple[Dict[int, int], Dict[int, int]]:
    """下一日的偏移量：S'(d) = S(d-1)，累计模式下 S'(d) = S(d-1) + S'(d-1)"""
    time_offsets = {m: s + (spec.time_offset(m) if accumulate else 0) for m, s in solution.time_balance.items()}
    customer_offsets = {m: u + (spec.customer_offset(m) if accumulate else 0)
                        for m, u in solution.customer_balance.items()}
    return time_offsets, customer_offsets


def balance_statistics(solution: Solution) -> Dict[str, float]:
    """S̄/Ū 为各公司平衡量绝对值的平均，Ŝ/Û 为最大值"""
    s = np.abs(np.array(list(solution.time_balance.values()), dtype=float))
    u = np.abs(np.array(list(solution.customer_balance.values()), dtype=float))
    return {
        "S_bar": float(s.mean()) if s.size else 0.0,
        "U_bar": float(u.mean()) if u.size else 0.0,
        "S_hat": float(s.max()) if s.size else 0.0,
        "U_hat": float(u.max()) if u.size else 0.0,
    }


def _outcome_row(name: str, mode: Mode, alpha: Optional[float], seed: int, backend: str,
                 outcome: SolveOutcome) -> Dict:
    row = {"instance": name, "mode": mode.value, "alpha": alpha, "seed": seed, "backend": backend,
           "status": "ok", "cost": outcome.cost, "nc_cost": outcome.nc_cost, "sav": outcome.sav,
           "optimum": outcome.optimum, "gap": outcome.gap}
    row.update(balance_statistics(outcome.solution))
    stats = outcome.statistics
    if stats is not None:
        row["iterations"] = stats.iterations
        row["improvements"] = stats.improvements
        for op, count in stats.destroy_hits.items():
            row["d_{}".format(op)] = count
        for op, count in stats.repair_hits.items():
            row["r_{}".format(op)] = count
    return row


def run_benchmark_task(task) -> Tuple[List[Dict], List[Dict], List[Dict]]:
    """
    批量实验的工作单元：一个实例、一个种子下的全部(模式, α)组合

    单个组合失败时记录状态并继续。

    Returns:
        (报告行列表, 运行时间行列表, 搜索轨迹行列表)
    """
    solver_config, instance_path, seed, combos, backend = task
    name = Path(instance_path).stem
    executor = SolverExecutor(solver_config, name="bench")
    rows, timings, traces = [], [], []
    try:
        instance = read_instance(instance_path)
        executor.prepare(instance)
    except Exception as e:
        for mode, alpha in combos:
            rows.append({"instance": name, "mode": mode.value, "alpha": alpha, "seed": seed, "backend": backend,
                         "status": "error: {}".format(e)})
        return rows, timings, traces

    for mode, alpha in combos:
        spec = executor.balance_spec(mode, alpha or 0.0, alpha or 0.0)
        try:
            outcome = executor.solve(instance, spec, backend, seed)
            row = _outcome_row(name, mode, alpha, seed, backend, outcome)
            if outcome.statistics is not None:
                row["destroy_pool"] = "+".join(solver_config.alns.destroy_operators)
                row["repair_pool"] = "+".join(solver_config.alns.repair_operators)
            rows.append(row)
            timings.append({"instance": name, "mode": mode.value, "alpha": alpha, "seed": seed,
                            "runtime": round(outcome.runtime, 3)})
            if outcome.statistics is not None:
                for iteration, best_cost, current_cost, q in outcome.statistics.trace:
                    traces.append({"instance": name, "mode": mode.value, "alpha": alpha, "seed": seed,
                                   "iteration": iteration, "best_cost": best_cost,
                                   "current_cost": current_cost, "q": q})
            executor.logger.info("{} {} alpha={} seed={}: cost {}".format(
                name, mode.value, "" if alpha is None else alpha, seed, outcome.cost))
        except (InfeasibleModelError, InfeasibleSolutionError) as e:
            rows.append({"instance": name, "mode": mode.value, "alpha": alpha, "seed": seed,
                         "backend": backend, "status": "infeasible"})
            executor.logger.error("{} {} alpha={} seed={}: {}".format(name, mode.value, alpha, seed, e))
        except (CdarpError, ValueError) as e:
            rows.append({"instance": name, "mode": mode.value, "alpha": alpha, "seed": seed,
                         "backend": backend, "status": "error: {}".format(e)})
            executor.logger.error("{} {} alpha={} seed={}: {}".format(name, mode.value, alpha, seed, e))
    return rows, timings, traces


def _sort_key(row: Dict):
    alpha = row.get("alpha")
    return (row["instance"], row["seed"], MODE_ORDER.index(row["mode"]), -1.0 if alpha is None else alpha)


def report_frame(rows: Sequence[Dict]) -> pd.DataFrame:
    frame = pd.DataFrame(sorted(rows, key=_sort_key), columns=REPORT_COLUMNS)
    integer_columns = ["seed", "cost", "nc_cost", "optimum", "iterations", "improvements"] + \
        [c for c in REPORT_COLUMNS if c.startswith("d_") or c.startswith("r_")]
    for column in integer_columns:
        frame[column] = frame[column].astype("Int64")
    return frame


def summary_frame(report: pd.DataFrame) -> pd.DataFrame:
    """按(模式, α)汇总：平均成本、SAV、GAP、平衡统计以及达到最优的比例"""
    ok = report[report["status"] == "ok"].copy()
    ok["alpha"] = ok["alpha"].fillna(-1.0)
    for column in ("cost", "optimum", "sav", "gap"):
        ok[column] = ok[column].astype(float)
    ok["at_optimum"] = np.where(ok["optimum"].isna(), np.nan, (ok["cost"] == ok["optimum"]).astype(float))
    grouped = ok.groupby(["mode", "alpha"], sort=False).agg(
        runs=("cost", "size"), cost=("cost", "mean"), sav=("sav", "mean"), gap=("gap", "mean"),
        S_bar=("S_bar", "mean"), U_bar=("U_bar", "mean"), S_hat=("S_hat", "max"), U_hat=("U_hat", "max"),
        at_optimum=("at_optimum", "mean"),
    ).reset_index()
    grouped["order"] = grouped["mode"].map(MODE_ORDER.index)
    grouped = grouped.sort_values(["order", "alpha"]).drop(columns="order")
    grouped["alpha"] = grouped["alpha"].where(grouped["alpha"] >= 0)
    return grouped.reset_index(drop=True)


def ranking_frame(report: pd.DataFrame, prefix: str, operators: Sequence[str]) -> pd.DataFrame:
    """每个模式内按成功次数总和给算子排名（I为最多），同分按算子顺序"""
    rows = []
    ok = report[report["status"] == "ok"]
    for mode in MODE_ORDER:
        subset = ok[ok["mode"] == mode]
        if subset.empty:
            continue
        totals = [(op, int(subset["{}_{}".format(prefix, op)].fillna(0).sum())) for op in operators]
        ordered = sorted(range(len(totals)), key=lambda i: -totals[i][1])
        for rank, index in enumerate(ordered):
            op, hits = totals[index]
            rows.append({"mode": mode, "operator": op, "hits": hits, "rank": ROMAN[rank]})
    return pd.DataFrame(rows, columns=["mode", "operator", "hits", "rank"])


def _write_csv(frame: pd.DataFrame, path: Path) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.4f")
    return str(path)


class BenchManager:
    """实验管理器"""

    def __init__(self, params_file: Optional[str] = None, generator_file: Optional[str] = None):
        """
        初始化实验管理器

        Args:
            params_file: ALNS参数文件
            generator_file: 生成器参数文件
        """
        reader = config.ConfigReader(params_file, generator_file)
        self.config = reader.load_solver_config()
        self.executor = SolverExecutor(self.config)

    def spec_from_args(self, args):
        """由命令行参数构造平衡约束配置"""
        mode = Mode.parse(args.mode)
        alpha_t = args.alpha_t if args.alpha_t is not None else args.alpha
        alpha_c = args.alpha_c if args.alpha_c is not None else args.alpha
        if mode.bounds_time and alpha_t is None:
            raise ValueError("Mode {} needs --alpha or --alpha-t".format(mode.value))
        if mode.bounds_customers and alpha_c is None:
            raise ValueError("Mode {} needs --alpha or --alpha-c".format(mode.value))
        time_offsets, customer_offsets = {}, {}
        if getattr(args, 'offsets', None):
            time_offsets, customer_offsets = read_offsets(args.offsets, args.accumulate)
        return self.executor.balance_spec(mode, alpha_t or 0.0, alpha_c or 0.0, time_offsets, customer_offsets)

    def _load(self, instance_path: str) -> Instance:
        print("Loading instance: {}".format(instance_path))
        return read_instance(instance_path)

    def _print_summary(self, name: str, spec, outcome: SolveOutcome):
        print("\n" + "=" * 50)
        print("Solve Summary: {}".format(name))
        print("=" * 50)
        print("Mode: {}  alpha_t: {}  alpha_c: {}".format(spec.mode.value, spec.alpha_t, spec.alpha_c))
        print("Backend: {}  seed: {}".format(outcome.backend, outcome.seed))
        print("Cost: {}".format(outcome.cost))
        if outcome.nc_cost is not None:
            print("NC cost: {}  SAV: {}%".format(outcome.nc_cost, percent(outcome.sav)))
        if outcome.optimum is not None:
            print("Optimum: {}  GAP: {}%".format(outcome.optimum, percent(outcome.gap)))
        for company_id in sorted(outcome.solution.time_balance):
            s = outcome.solution.time_balance[company_id]
            u = outcome.solution.customer_balance[company_id]
            print("Company {}: S={} U={} S+S'={} U+U'={}".format(
                company_id, s, u, s + spec.time_offset(company_id), u + spec.customer_offset(company_id)))
        print("Runtime: {:.3f}s".format(outcome.runtime))
        print("=" * 50 + "\n")

    def cmd_solve(self, instance_path: str, spec, backend: str = "alns", seed: int = 0,
                  out_dir: str = "./results", reference: bool = True) -> SolveOutcome:
        """
        求解单个实例并写出解文件

        Returns:
            SolveOutcome: 求解结果
        """
        instance = self._load(instance_path)
        name = Path(instance_path).stem
        outcome = self.executor.solve(instance, spec, backend, seed, reference=reference)
        out = Path(out_dir)
        solution_path = write_solution(out / "{}_{}.solution.json".format(name, spec.mode.value.lower()),
                                       instance, outcome.solution, spec)
        print("Solution written: {}".format(solution_path))
        if outcome.statistics is not None:
            stats = outcome.statistics
            _write_csv(stats.trace_frame(), out / "{}_{}.trace.csv".format(name, spec.mode.value.lower()))
            _write_csv(stats.hits_frame(), out / "{}_{}.hits.csv".format(name, spec.mode.value.lower()))
        self._print_summary(name, spec, outcome)
        return outcome

    def cmd_benchmark(self, instance_paths: Sequence[str], modes: Sequence[str], alphas: Sequence[float],
                      seeds: Sequence[int], backend: str = "alns", out_dir: str = "./results",
                      workers: Optional[int] = None) -> pd.DataFrame:
        """
        运行实验矩阵

        NC 和 UC 不依赖 α，每个实例和种子只运行一次；T、C、TC 对每个 α 各运行一次，
        α 同时作为时间和客户平衡百分比。

        Returns:
            pd.DataFrame: 报告表
        """
        if backend not in BACKENDS:
            raise ValueError("Unknown backend: {}".format(backend))
        parsed = [Mode.parse(m) for m in modes]
        combos = []
        for mode in parsed:
            if mode.bounds_time or mode.bounds_customers:
                combos.extend((mode, float(alpha)) for alpha in alphas)
            else:
                combos.append((mode, None))
        tasks = [(self.config, str(path), seed, combos, backend) for path in instance_paths for seed in seeds]
        workers = workers or self.config.benchmark.workers
        print("Running {} tasks ({} runs each) with {} worker(s)...".format(len(tasks), len(combos), workers))

        rows, timings, traces = [], [], []
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(run_benchmark_task, tasks))
        else:
            results = [run_benchmark_task(task) for task in tasks]
        for task_rows, task_timings, task_traces in results:
            rows.extend(task_rows)
            timings.extend(task_timings)
            traces.extend(task_traces)

        report = report_frame(rows)
        out = Path(out_dir)
        print("Report written: {}".format(_write_csv(report, out / "report.csv")))
        print("Summary written: {}".format(_write_csv(summary_frame(report), out / "summary.csv")))
        _write_csv(ranking_frame(report, "d", self.config.alns.destroy_operators), out / "ranking_destroy.csv")
        _write_csv(ranking_frame(report, "r", self.config.alns.repair_operators), out / "ranking_repair.csv")
        timing_frame = pd.DataFrame(sorted(timings, key=_sort_key),
                                    columns=["instance", "mode", "alpha", "seed", "runtime"])
        _write_csv(timing_frame, out / "timings.csv")
        trace_frame = pd.DataFrame(sorted(traces, key=lambda row: (_sort_key(row), row["iteration"])),
                                   columns=["instance", "mode", "alpha", "seed", "iteration", "best_cost",
                                            "current_cost", "q"])
        _write_csv(trace_frame, out / "traces.csv")
        failed = int((report["status"] != "ok").sum())
        if failed:
            print("Warning: {} of {} runs did not finish".format(failed, len(report)))
        return report

    def cmd_multiday(self, instance_paths: Sequence[str], spec, backend: str = "alns", seed: int = 0,
                     out_dir: str = "./results", accumulate: bool = False) -> pd.DataFrame:
        """
        多日记忆链：第一天无记忆，之后每天的偏移量取自前一天的平衡量

        Raises:
            InfeasibleModelError: 某一天不可行（已完成的天数仍写入报告）
        """
        out = Path(out_dir)
        rows = []
        day_spec = spec
        company_set = None
        try:
            for day, path in enumerate(instance_paths, 1):
                instance = self._load(path)
                if company_set is None:
                    company_set = instance.company_ids
                elif instance.company_ids != company_set:
                    raise ValueError("Day {} has companies {}, expected {}".format(day, instance.company_ids, company_set))
                outcome = self.executor.solve(instance, day_spec, backend, seed)
                write_solution(out / "day{:02d}_{}.solution.json".format(day, Path(path).stem),
                               instance, outcome.solution, day_spec)
                for company_id in instance.company_ids:
                    s = outcome.solution.time_balance[company_id]
                    u = outcome.solution.customer_balance[company_id]
                    rows.append({
                        "day": day, "instance": Path(path).stem, "company": company_id,
                        "cost": outcome.cost, "nc_cost": outcome.nc_cost, "sav": outcome.sav,
                        "S": s, "U": u, "S_offset": day_spec.time_offset(company_id),
                        "U_offset": day_spec.customer_offset(company_id),
                        "S_total": s + day_spec.time_offset(company_id),
                        "U_total": u + day_spec.customer_offset(company_id),
                    })
                print("Day {}: cost {} SAV {}%".format(day, outcome.cost, percent(outcome.sav)))
                day_spec = day_spec.with_offsets(*next_offsets(outcome.solution, day_spec, accumulate))
        finally:
            frame = pd.DataFrame(rows, columns=["day", "instance", "company", "cost", "nc_cost", "sav", "S", "U",
                                                "S_offset", "U_offset", "S_total", "U_total"])
            print("Multi-day report written: {}".format(_write_csv(frame, out / "multiday.csv")))
        return frame

    def cmd_generate(self, group: str, seeds: Sequence[int], out_dir: str,
                     companies: Optional[int] = None, requests_per_company: Optional[int] = None) -> List[str]:
        paths = []
        for seed in seeds:
            instance = generate(group, seed, self.config.generator, companies, requests_per_company)
            path = write_instance(instance, Path(out_dir) / "{}_{:04d}.json".format(group.upper(), seed))
            paths.append(path)
            print("Instance written: {}".format(path))
        return paths

    def cmd_validate(self, instance_path: str, solution_path: Optional[str] = None, spec=None) -> bool:
        """打印实例（以及可选解文件）的校验报告，返回是否全部通过"""
        instance = self._load(instance_path)
        report = validate_instance(instance)
        if report:
            print("Instance validation failed:")
            for error in report:
                print("- {}".format(error))
            return False
        print("Instance is valid: {} companies, {} vehicles, {} requests".format(
            len(instance.companies), len(instance.vehicles), len(instance.requests)))
        if solution_path:
            spec = spec or self.executor.balance_spec(Mode.UC)
            solution, _ = read_solution(solution_path, instance)
            problems = check_solution(instance, solution, spec)
            if problems:
                print("Solution check failed:")
                for error in problems:
                    print("- {}".format(error))
                return False
            print("Solution is feasible for mode {} (cost {})".format(spec.mode.value, solution.cost))
        return True

    def cmd_export_lp(self, instance_path: str, spec, out_path: str) -> str:
        instance = self._load(instance_path)
        generator = LpGenerator(instance, spec, self.config.max_variables)
        path = generator.save(out_path)
        print("LP model written: {}".format(path))
        return path

    def cmd_import_solution(self, instance_path: str, values_path: str, spec, out_path: str) -> bool:
        """读回外部求解器结果，写出解文件并检查可行性"""
        instance = self._load(instance_path)
        with open(values_path, 'r', encoding='utf-8') as f:
            solution = import_solution(f.read(), instance)
        path = write_solution(out_path, instance, solution, spec)
        print("Solution written: {} (cost {})".format(path, solution.cost))
        problems = check_solution(instance, solution, spec)
        for error in problems:
            print("- {}".format(error))
        return not problems

    def cmd_dump_measures(self, instance_path: str, out_path: str) -> str:
        instance = self._load(instance_path)
        table = self.executor.prepare(instance)
        path = table.dump_csv(out_path)
        print("Measure table written: {}".format(path))
        return path

