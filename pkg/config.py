#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
求解器配置文件读取模块
支持YAML格式的配置文件
"""

import os
from dataclasses import fields
from pathlib import Path

import yaml

from alns import AlnsParams
from exact_oracle import EnumerationBudget
from instance_generator import GeneratorConfig
from lp_generator import DEFAULT_MAX_VARIABLES
from measures import MeasureConfig


class LoggingConfig(object):
    """日志配置数据类"""
    def __init__(self, level="INFO", format="%(asctime)s - %(name)s - %(levelname)s - %(message)s", log_dir=""):
        self.level = level      # 日志级别
        self.format = format    # 日志格式
        self.log_dir = log_dir  # 日志文件目录，为空时只输出到控制台


class BenchmarkConfig(object):
    """实验批量运行配置数据类"""
    def __init__(self, workers=1, trace_every=100, gap_reference=True, construction_attempts=50):
        self.workers = workers
        self.trace_every = trace_every
        # 实例在精确枚举预算内时计算GAP
        self.gap_reference = gap_reference
        self.construction_attempts = construction_attempts


class SolverConfig(object):
    """求解器配置数据类"""
    def __init__(self):
        self.logging = LoggingConfig()
        self.alns = AlnsParams()
        self.measures = MeasureConfig()
        self.oracle = EnumerationBudget()
        self.customer_rounding = "floor"  # 客户平衡阈值取整方式 (floor, half-up)
        self.generator = GeneratorConfig()
        self.benchmark = BenchmarkConfig()
        self.max_variables = DEFAULT_MAX_VARIABLES  # LP导出变量数上限


def _dataclass_from(cls, data, section):
    """按字段名构造配置数据类，未知字段报错"""
    data = data or {}
    if not isinstance(data, dict):
        raise ValueError("Section '{}' must be a mapping".format(section))
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValueError("Unknown {} parameters: {}".format(section, ", ".join(unknown)))
    return cls(**data)


def _merged(base, override):
    merged = dict(base or {})
    merged.update(override or {})
    return merged


class ConfigReader(object):
    """配置文件读取器"""

    # 系统配置文件路径（全局变量）
    SYSTEM_CONFIG_FILE = str(Path(__file__).parent / "conf" / "system_config.yaml")

    def __init__(self, params_file=None, generator_file=None, system_config_file=None):
        """
        初始化配置读取器

        Args:
            params_file: ALNS参数文件路径，其 alns 段逐项覆盖系统配置
            generator_file: 生成器参数文件路径，其 generator 段逐项覆盖系统配置
            system_config_file: 替代默认系统配置文件
        """
        self.system_config_file = system_config_file or self.SYSTEM_CONFIG_FILE
        self.system_config_data = self._load_system_config()
        self.params_data = self._load_optional(params_file)
        self.generator_data = self._load_optional(generator_file)

    def _load_system_config(self):
        """加载系统配置文件"""
        if not os.path.exists(self.system_config_file):
            raise IOError("System configuration file not found: {}".format(self.system_config_file))
        return self._load_config(self.system_config_file)

    def _load_optional(self, config_file):
        if not config_file:
            return {}
        if not os.path.exists(config_file):
            raise IOError("Configuration file not found: {}".format(config_file))
        return self._load_config(config_file)

    def _load_config(self, config_path):
        """加载配置文件"""
        file_ext = os.path.splitext(config_path)[1].lower()

        if file_ext in ['.yaml', '.yml']:
            return self._load_yaml(config_path)
        else:
            raise ValueError("Unsupported configuration file format: {}, only YAML format is supported".format(file_ext))

    def _load_yaml(self, config_path):
        """加载YAML配置文件"""
        try:
            with open(config_path, 'r', encoding='utf-8') as f:
                return yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ValueError("YAML configuration file parsing error: {}".format(e))

    def get_solver_config(self):
        """获取求解器配置对象"""
        system = self.system_config_data
        config = SolverConfig()

        log_config = system.get('logging', {})
        config.logging = LoggingConfig(
            level=str(log_config.get('level', 'INFO')).upper(),
            format=log_config.get('format', config.logging.format),
            log_dir=log_config.get('log_dir', '') or ''
        )

        config.alns = _dataclass_from(AlnsParams, _merged(system.get('alns'), self.params_data.get('alns')), 'alns')
        config.measures = _dataclass_from(MeasureConfig, system.get('measures'), 'measures')
        config.oracle = _dataclass_from(EnumerationBudget, system.get('oracle'), 'oracle')
        config.generator = _dataclass_from(
            GeneratorConfig, _merged(system.get('generator'), self.generator_data.get('generator')), 'generator')

        thresholds = system.get('thresholds', {})
        config.customer_rounding = thresholds.get('customer_rounding', 'floor')

        bench_config = system.get('benchmark', {})
        config.benchmark = BenchmarkConfig(
            workers=int(bench_config.get('workers', 1)),
            trace_every=int(bench_config.get('trace_every', config.alns.trace_every)),
            gap_reference=bool(bench_config.get('gap_reference', True)),
            construction_attempts=int(bench_config.get('construction_attempts', 50))
        )

        export_config = system.get('export', {})
        config.max_variables = int(export_config.get('max_variables', DEFAULT_MAX_VARIABLES))
        return config

    def validate_config(self, config):
        """
        验证配置的有效性

        Args:
            config: 求解器配置对象

        Returns:
            错误信息列表，空列表表示验证通过
        """
        errors = []

        if config.logging.level not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
            errors.append("Unsupported logging level: {}".format(config.logging.level))

        if config.alns.t_max <= 1:
            errors.append("alns.t_max must be greater than 1, got {}".format(config.alns.t_max))
        errors.extend(config.alns.validate())

        if config.measures.cap_factor <= 0:
            errors.append("measures.cap_factor must be positive")

        oracle = config.oracle
        if min(oracle.max_requests, oracle.max_vehicles, oracle.node_cap) < 1 or oracle.time_budget <= 0:
            errors.append("oracle budget values must be positive")

        if config.customer_rounding not in ('floor', 'half-up'):
            errors.append("Unsupported customer rounding: {}".format(config.customer_rounding))

        errors.extend(config.generator.validate())

        if config.benchmark.workers < 1:
            errors.append("benchmark.workers must be at least 1")
        if config.benchmark.trace_every < 1:
            errors.append("benchmark.trace_every must be at least 1")
        if config.benchmark.construction_attempts < 1:
            errors.append("benchmark.construction_attempts must be at least 1")

        if config.max_variables < 1:
            errors.append("export.max_variables must be at least 1")

        return errors

    def load_solver_config(self):
        """
        读取并验证配置

        Returns:
            求解器配置对象
        """
        config = self.get_solver_config()
        errors = self.validate_config(config)
        if errors:
            error_msg = "Configuration file validation failed:\n" + "\n".join("- {}".format(error) for error in errors)
            raise ValueError(error_msg)
        return config


def load_solver_config(params_file=None, generator_file=None):
    """
    便捷函数：加载系统配置并叠加参数文件

    Args:
        params_file: ALNS参数文件路径
        generator_file: 生成器参数文件路径

    Returns:
        求解器配置对象
    """
    reader = ConfigReader(params_file, generator_file)
    return reader.load_solver_config()
