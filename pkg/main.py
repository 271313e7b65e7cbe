#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
协同叫车调度求解器 - 主程序
提供命令行接口来生成实例、求解、运行实验和导出模型
"""

import argparse
import sys
from pathlib import Path

# 添加当前目录到Python路径
sys.path.insert(0, str(Path(__file__).parent))

import bench_manager


def build_parser():
    parser = argparse.ArgumentParser(
        description="Collaborative dial-a-ride solver with time and customer balance constraints",
    )

    # 添加子命令
    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    # 求解、实验和工具命令
    bench_manager.register_bench_commands(subparsers)
    return parser


def main():
    """主函数"""
    parser = build_parser()
    args = parser.parse_args()

    # 如果没有指定命令，显示帮助信息
    if args.command is None:
        parser.print_help()
        return

    if args.command in bench_manager.BENCH_COMMANDS:
        bench_manager.handle_bench_command(args)


if __name__ == "__main__":
    main()
