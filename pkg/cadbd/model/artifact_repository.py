#!/usr/bin/env python
# -*- coding: utf-8 -*-

from typing import Any, Generic, List, Optional, Protocol, Type, TypeVar

from ..store_client import ArtifactStore
from .stage_run import StageRun


class Serializable(Protocol):
    def to_dict(self) -> Any: ...

    @classmethod
    def from_dict(cls, data: Any) -> Any: ...


# 定义泛型类型变量
T = TypeVar("T", bound=Serializable)


class ArtifactRepository(Generic[T]):
    """类型化产物仓库，负责 JSON 产物的存储和检索

    使用 ArtifactStore 作为后端存储
    """

    def __init__(self, item_type: Type[T], prefix: str, store: Optional[ArtifactStore] = None):
        """初始化仓库

        Args:
            item_type: 产物类型，需实现 to_dict / from_dict
            prefix: 键前缀（即输出目录下的子目录）
            store: 后端存储，如不提供则使用默认输出根目录
        """
        self.item_type = item_type
        self.prefix = prefix
        self.store = store or ArtifactStore()

    def _get_key(self, name: str) -> str:
        return f"{self.prefix}/{name}"

    def save(self, name: str, item: T) -> bool:
        """保存产物

        Returns:
            是否保存成功
        """
        return self.store.set(self._get_key(name), item.to_dict())

    def get(self, name: str) -> Optional[T]:
        """读取产物，未找到则返回None"""
        data = self.store.get(self._get_key(name))
        if data is None:
            return None
        return self.item_type.from_dict(data)

    def delete(self, name: str) -> bool:
        return self.store.delete(self._get_key(name))

    def exists(self, name: str) -> bool:
        return self.store.exists(self._get_key(name))

    def names(self) -> List[str]:
        """仓库中的全部产物名"""
        head = f"{self.prefix}/"
        return [k[len(head):] for k in self.store.keys(self.prefix) if k.startswith(head)]

    def path_for(self, name: str) -> str:
        return self.store.path_for(self._get_key(name))


def manifest_repository(store: ArtifactStore) -> ArtifactRepository[StageRun]:
    """阶段清单仓库"""
    return ArtifactRepository[StageRun](StageRun, "manifests", store)
