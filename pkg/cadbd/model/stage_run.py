#!/usr/bin/env python
# -*- coding: utf-8 -*-

import hashlib
import json
from enum import Enum
from typing import Any, ClassVar, Dict, Optional


class StageStatus(str, Enum):
    """阶段运行状态枚举类"""
    PENDING = "pending"     # 等待执行
    RUNNING = "running"     # 正在执行
    COMPLETED = "completed" # 已完成
    FAILED = "failed"       # 执行失败


def stage_run_id(stage: str, config_hash: str, seed: Optional[int]) -> str:
    """由 (阶段, 配置哈希, 种子) 派生确定性的运行ID"""
    payload = f"{stage}|{config_hash}|{seed}"
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


class StageRun:
    """流水线阶段的一次运行

    持久化后即为该阶段的清单(manifest)。不记录墙钟时间，
    相同配置与种子重复运行得到字节一致的清单。
    """

    # 类属性，定义属性的序列化映射
    serializable_fields: ClassVar[Dict[str, str]] = {
        "stage": "stage",
        "run_id": "run_id",
        "status": "status",
        "config_hash": "config_hash",
        "seed": "seed",
        "version": "version",
        "inputs": "inputs",
        "outputs": "outputs",
        "error": "error",
        "error_type": "error_type",
    }

    def __init__(
        self,
        stage: str,
        config_hash: str = "",
        seed: Optional[int] = None,
        version: str = "",
        run_id: Optional[str] = None,
        status: StageStatus = StageStatus.PENDING,
        inputs: Optional[Dict[str, str]] = None,
        outputs: Optional[Dict[str, str]] = None,
        error: Optional[str] = None,
        error_type: Optional[str] = None,
    ):
        """初始化阶段运行

        Args:
            stage: 阶段名
            config_hash: 配置文件的 SHA-256
            seed: 本次运行使用的种子
            version: 工具版本
            run_id: 运行ID，如不提供则由阶段、配置哈希与种子派生
            status: 运行状态，默认为PENDING
            inputs: 输入文件相对路径 -> SHA-256
            outputs: 输出文件相对路径 -> SHA-256
        """
        self.stage = stage
        self.config_hash = config_hash
        self.seed = seed
        self.version = version
        self.run_id = run_id or stage_run_id(stage, config_hash, seed)
        self.status = status if isinstance(status, StageStatus) else StageStatus(status)
        self.inputs = dict(inputs or {})
        self.outputs = dict(outputs or {})
        self.error = error
        self.error_type = error_type

    def update_status(self, status: StageStatus) -> None:
        self.status = status if isinstance(status, StageStatus) else StageStatus(status)

    def set_error(self, error: BaseException) -> None:
        """记录失败原因"""
        self.error = str(error)
        self.error_type = type(error).__name__
        self.update_status(StageStatus.FAILED)

    @property
    def succeeded(self) -> bool:
        return self.status == StageStatus.COMPLETED

    def to_dict(self) -> Dict[str, Any]:
        result = {}
        for attr_name, dict_key in self.serializable_fields.items():
            value = getattr(self, attr_name)
            if isinstance(value, Enum):
                value = value.value
            elif isinstance(value, dict):
                value = dict(sorted(value.items()))
            result[dict_key] = value
        return result

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "StageRun":
        """从字典创建实例"""
        reverse_mapping = {v: k for k, v in cls.serializable_fields.items()}
        kwargs = {}
        for dict_key, value in data.items():
            if dict_key in reverse_mapping:
                attr_name = reverse_mapping[dict_key]
                if attr_name == "status":
                    value = StageStatus(value)
                kwargs[attr_name] = value
        return cls(**kwargs)

    @classmethod
    def from_json(cls, json_str: str) -> "StageRun":
        return cls.from_dict(json.loads(json_str))
