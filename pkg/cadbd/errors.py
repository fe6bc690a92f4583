#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
异常定义

所有阶段共用的异常层次。DomainError 同时继承 ValueError，
调用方可以按标准库习惯捕获参数错误。
"""
from typing import Any, Dict, Optional


class CadbdError(Exception):
    """工具包异常基类"""


class DomainError(CadbdError, ValueError):
    """前置条件不满足（参数越界、维度不一致、时间点不在网格上等）"""


class ConfigError(DomainError):
    """配置缺失或非法，携带出错的键名"""

    def __init__(self, key: str, message: Optional[str] = None):
        self.key = key
        super().__init__(message or f"配置项缺失或非法: {key}")


class SimulationFault(CadbdError):
    """随机模拟过程中出现负计数或非有限倾向函数"""

    def __init__(self, message: str, state: Optional[Dict[str, Any]] = None):
        self.state = dict(state or {})
        super().__init__(f"{message}; 诊断状态: {self.state}")


class EnsembleFault(CadbdError):
    """集合模拟中某条轨迹失败"""

    def __init__(self, seed: int, cause: BaseException):
        self.seed = seed
        self.cause = cause
        super().__init__(f"种子 {seed} 的轨迹模拟失败: {cause}")


class TrainingFault(CadbdError):
    """训练损失出现非有限值"""

    def __init__(self, step: int, message: str = "损失为非有限值"):
        self.step = step
        super().__init__(f"第 {step} 步: {message}")


class RolloutFault(CadbdError):
    """积分状态出现非有限值"""

    def __init__(self, step: int, message: str = "状态为非有限值"):
        self.step = step
        super().__init__(f"第 {step} 步: {message}")


class CheckpointError(CadbdError):
    """模型检查点无法读取或版本不匹配"""


class DerivativeFault(CadbdError):
    """TVR 目标函数在某次迭代上升"""

    def __init__(self, iteration: int, before: float, after: float):
        self.iteration = iteration
        self.before = before
        self.after = after
        super().__init__(f"第 {iteration} 次迭代目标函数上升: {before} -> {after}")
