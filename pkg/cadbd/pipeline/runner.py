#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
阶段运行器

阶段处理函数通过 register_stage 装饰器登记，运行器创建时统一注册。
每次运行写出 <out>/manifests/<stage>.json，记录配置哈希、种子、版本以及
输入/输出文件的 SHA-256。
"""
import hashlib
import logging
import os
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from .. import __version__
from ..errors import CadbdError, DomainError
from ..model.artifact_repository import manifest_repository
from ..model.stage_run import StageRun, StageStatus
from ..store_client import ArtifactStore
from .config import PipelineConfig

logger = logging.getLogger("stage_runner")

STAGE_ORDER = ["simulate", "transform", "estimate", "derivative", "train", "rollout", "analyze", "report"]

StageIO = Tuple[List[str], List[str]]


@dataclass
class StageContext:
    """阶段运行上下文

    Args:
        config: 流水线配置
        out_dir: 输出根目录
        jobs: 集合模拟的并行进程数
        seed: 命令行给出的种子覆盖值
    """
    config: PipelineConfig
    out_dir: str
    jobs: Optional[int] = None
    seed: Optional[int] = None

    def __post_init__(self):
        self.out_dir = os.path.abspath(self.out_dir)
        os.makedirs(self.out_dir, exist_ok=True)
        self.store = ArtifactStore(self.out_dir)

    def path(self, *parts: str) -> str:
        return os.path.join(self.out_dir, *parts)

    def rel(self, path: str) -> str:
        """相对输出根目录的路径，统一使用 "/" 分隔"""
        return os.path.relpath(os.path.abspath(path), self.out_dir).replace(os.sep, "/")

    def files_under(self, *parts: str, suffix: str = "") -> List[str]:
        """某个子目录下的全部文件（排序后）

        Raises:
            DomainError: 目录不存在，通常是上游阶段尚未运行
        """
        root = self.path(*parts)
        if not os.path.isdir(root):
            raise DomainError(f"缺少上游产物目录: {self.rel(root)}")
        found = []
        for directory, _, names in os.walk(root):
            found.extend(os.path.join(directory, n) for n in names if n.endswith(suffix))
        return sorted(found)

    def require(self, *parts: str) -> str:
        """上游产物文件路径

        Raises:
            DomainError: 文件不存在
        """
        path = self.path(*parts)
        if not os.path.exists(path):
            raise DomainError(f"缺少上游产物: {self.rel(path)}")
        return path


def file_sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def hash_files(ctx: StageContext, paths: Iterable[str]) -> Dict[str, str]:
    return {ctx.rel(p): file_sha256(p) for p in sorted(set(paths))}


class StageRunner:
    """按名称执行阶段并持久化清单"""

    def __init__(self):
        self.handlers: Dict[str, Callable[[StageContext], StageIO]] = {}

    def register_stage(self, name: str, handler: Callable[[StageContext], StageIO]) -> None:
        """注册阶段处理函数

        Args:
            name: 阶段名
            handler: 接收 StageContext，返回 (输入文件列表, 输出文件列表)
        """
        logger.debug(f"注册阶段: {name}")
        self.handlers[name] = handler

    def run_stage(self, name: str, ctx: StageContext) -> StageRun:
        """运行单个阶段

        失败时清单记录错误类型与信息后原样抛出异常。

        Raises:
            DomainError: 未知的阶段名
        """
        if name not in self.handlers:
            raise DomainError(f"未知的阶段: {name}")
        repository = manifest_repository(ctx.store)
        run = StageRun(name, ctx.config.config_hash, ctx.config.ensemble.base_seed, __version__)
        run.update_status(StageStatus.RUNNING)
        repository.save(name, run)

        handler = self.handlers[name]
        logger.info(f"开始阶段 {name} (run_id={run.run_id})")
        try:
            inputs, outputs = handler(ctx)
            run.inputs = hash_files(ctx, inputs)
            run.outputs = hash_files(ctx, outputs)
        except CadbdError as e:
            logger.error(f"阶段 {name} 失败: {e}")
            run.set_error(e)
            repository.save(name, run)
            raise
        except Exception as e:
            logger.exception(f"阶段 {name} 发生未处理的错误")
            run.set_error(e)
            repository.save(name, run)
            raise

        run.update_status(StageStatus.COMPLETED)
        repository.save(name, run)
        logger.info(f"阶段 {name} 完成: 输入 {len(run.inputs)} 个, 输出 {len(run.outputs)} 个文件")
        return run

    def run_all(self, ctx: StageContext, stages: Sequence[str] = STAGE_ORDER) -> List[StageRun]:
        """按顺序运行多个阶段，遇到失败即停止"""
        return [self.run_stage(name, ctx) for name in stages]


def register_stage(name: str):
    """登记阶段处理函数的装饰器

    Args:
        name: 阶段名

    Returns:
        装饰器函数
    """
    def decorator(f):
        if not hasattr(register_stage, "pending_stages"):
            register_stage.pending_stages = []
        register_stage.pending_stages.append((name, f))
        return f
    return decorator


def create_runner() -> StageRunner:
    """创建运行器并注册全部已登记的阶段

    登记表不清空，同一进程可以多次创建运行器。
    """
    from . import stages  # noqa: F401  导入即登记

    runner = StageRunner()
    for name, handler in getattr(register_stage, "pending_stages", []):
        runner.register_stage(name, handler)
    return runner
