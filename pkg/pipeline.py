#!/usr/bin/env python
# -*- coding: utf-8 -*-

import argparse
import logging
import sys
from typing import List, Optional

from cadbd import __version__
from cadbd.errors import CadbdError, ConfigError
from cadbd.pipeline import STAGE_ORDER, StageContext, create_runner, load_config
from cadbd.store_client import default_output_root

# 配置日志
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger("pipeline")

EXIT_OK = 0
EXIT_FAULT = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    """命令行解析器：每个阶段一个子命令，外加 all"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="YAML 配置文件路径")
    common.add_argument("--out", default=None, help="输出根目录，默认取 CADBD_OUTPUT_ROOT")
    common.add_argument("--jobs", type=int, default=None, help="集合模拟的并行进程数，默认取 CADBD_JOBS")
    common.add_argument("--seed", type=int, default=None, help="覆盖集合基准种子与训练种子")
    common.add_argument("--verbose", action="store_true", help="输出调试日志")

    parser = argparse.ArgumentParser(prog="cadbd", description="钙振荡降阶模型流水线")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)
    for name in STAGE_ORDER:
        commands.add_parser(name, parents=[common], help=f"运行 {name} 阶段")
    commands.add_parser("all", parents=[common], help="按顺序运行全部阶段")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """流水线主函数入口点

    Returns:
        退出码：0 成功，1 阶段失败，2 配置错误
    """
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        config = load_config(args.config).with_seed(args.seed)
        ctx = StageContext(config, args.out or default_output_root(), jobs=args.jobs, seed=args.seed)
        runner = create_runner()
        stages = STAGE_ORDER if args.command == "all" else [args.command]
        runner.run_all(ctx, stages)
    except ConfigError as e:
        logger.error(f"配置错误 [{e.key}]: {e}")
        return EXIT_USAGE
    except CadbdError as e:
        logger.error(f"流水线失败: {e}")
        return EXIT_FAULT
    except Exception:
        logger.exception("流水线发生未处理的错误")
        return EXIT_FAULT

    logger.info(f"完成: {args.command}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
