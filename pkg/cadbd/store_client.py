#!/usr/bin/env python
# -*- coding: utf-8 -*-

import os
import json
import logging
from typing import Any, List, Optional

from dotenv import load_dotenv

logger = logging.getLogger("artifact_store")

# 从 .env 加载默认输出根目录等设置
load_dotenv()

DEFAULT_OUTPUT_ROOT = "outputs"


def default_output_root() -> str:
    """默认输出根目录，取自环境变量 CADBD_OUTPUT_ROOT"""
    return os.getenv("CADBD_OUTPUT_ROOT", DEFAULT_OUTPUT_ROOT)


class ArtifactStore:
    """以文件系统为后端的 JSON 键值存储

    键中的 "/" 映射为子目录，值保存为 <root>/<key>.json。
    读写失败时记录日志并返回 False / 默认值。
    """

    def __init__(self, root: Optional[str] = None):
        """初始化存储

        Args:
            root: 根目录，如不提供则使用 CADBD_OUTPUT_ROOT
        """
        self.root = os.path.abspath(root or default_output_root())
        os.makedirs(self.root, exist_ok=True)
        logger.debug(f"产物存储根目录: {self.root}")

    def path_for(self, key: str, suffix: str = ".json") -> str:
        """键对应的文件路径"""
        if not key or key.startswith("/") or ".." in key.split("/"):
            raise ValueError(f"非法的存储键: {key!r}")
        return os.path.join(self.root, *key.split("/")) + suffix

    def set(self, key: str, value: Any) -> bool:
        """保存 JSON 值

        Args:
            key (str): 键
            value (any): 值（可 JSON 序列化）

        Returns:
            bool: 操作是否成功
        """
        try:
            path = self.path_for(key)
            os.makedirs(os.path.dirname(path), exist_ok=True)
            text = value if isinstance(value, str) else json.dumps(value, indent=2, sort_keys=True)
            tmp_path = path + ".tmp"
            with open(tmp_path, "w", encoding="utf-8") as fh:
                fh.write(text)
            os.replace(tmp_path, path)
            return True
        except Exception as e:
            logger.error(f"写入产物 {key} 失败: {str(e)}")
            return False

    def get(self, key: str, default: Any = None) -> Any:
        """读取 JSON 值

        Args:
            key (str): 键
            default (any, optional): 默认值

        Returns:
            any: 解析后的值或默认值
        """
        try:
            path = self.path_for(key)
            if not os.path.exists(path):
                return default
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
            try:
                return json.loads(text)
            except json.JSONDecodeError:
                return text
        except Exception as e:
            logger.error(f"读取产物 {key} 失败: {str(e)}")
            return default

    def delete(self, key: str) -> bool:
        """删除键"""
        try:
            path = self.path_for(key)
            if os.path.exists(path):
                os.remove(path)
                return True
            return False
        except Exception as e:
            logger.error(f"删除产物 {key} 失败: {str(e)}")
            return False

    def exists(self, key: str) -> bool:
        """检查键是否存在"""
        try:
            return os.path.exists(self.path_for(key))
        except Exception as e:
            logger.error(f"检查产物 {key} 失败: {str(e)}")
            return False

    def keys(self, prefix: str = "") -> List[str]:
        """列出前缀下的所有键（按字典序）"""
        base = os.path.join(self.root, *prefix.split("/")) if prefix else self.root
        found = []
        for dirpath, _, filenames in os.walk(base):
            for name in filenames:
                if name.endswith(".json"):
                    rel = os.path.relpath(os.path.join(dirpath, name), self.root)
                    found.append(rel[:-len(".json")].replace(os.sep, "/"))
        return sorted(found)
