#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
集合数据集与标准化变换

EnsembleDataset 保存 M 条轨迹 × T 个时间点 × N 个物种的计数，
StandardizingTransform 为按物种的中心化与缩放。
"""
import json
import logging
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..errors import DomainError
from ..simulation.trajectory import Trajectory

logger = logging.getLogger("dataset")

# 方差低于此值的物种不缩放，只做中心化
DEGENERATE_VARIANCE = 1e-12
GRID_TOLERANCE = 1e-9
RECEPTOR_TOTAL = "IP3R"


@dataclass
class StandardizingTransform:
    """按物种的标准化变换 y = (x − m)/√v"""
    species: List[str]
    m: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.species = list(self.species)
        self.m = np.asarray(self.m, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.m.shape != (len(self.species),) or self.v.shape != (len(self.species),):
            raise DomainError("变换参数长度与物种数不一致")
        if np.any(self.v < 0) or not np.all(np.isfinite(self.v)):
            raise DomainError(f"方差必须为非负有限值: {self.v}")

    @property
    def divisor(self) -> np.ndarray:
        """缩放因子；退化方差的物种取 1"""
        return np.where(self.v < DEGENERATE_VARIANCE, 1.0, np.sqrt(self.v))

    def restrict(self, species: Sequence[str]) -> "StandardizingTransform":
        index = [self.species.index(s) for s in species]
        return StandardizingTransform(list(species), self.m[index], self.v[index])

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=float) - self.m) / self.divisor

    def invert(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=float) * self.divisor + self.m

    def invert_covariance(self, cov: np.ndarray) -> np.ndarray:
        """C → D C D，D = diag(divisor)"""
        d = self.divisor
        return np.asarray(cov) * d[:, None] * d[None, :]

    def to_dict(self) -> Dict[str, Any]:
        return {"species": self.species, "m": self.m.tolist(), "v": self.v.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "StandardizingTransform":
        return cls(data["species"], data["m"], data["v"])

    @classmethod
    def from_json(cls, json_str: str) -> "StandardizingTransform":
        return cls.from_dict(json.loads(json_str))


class EnsembleDataset:
    """公共时间网格上的轨迹集合

    values 的形状为 (M, T, N)。visible 为 data_matrix_at 输出的列（按声明顺序）。
    """

    def __init__(self, times: np.ndarray, values: np.ndarray, species: Sequence[str],
                 seeds: Optional[Sequence[int]] = None, label: Optional[float] = None,
                 transform: Optional[StandardizingTransform] = None,
                 visible: Optional[Sequence[str]] = None):
        self.times = np.asarray(times, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.species = list(species)
        if self.values.ndim != 3 or self.values.shape[1:] != (len(self.times), len(self.species)):
            raise DomainError(f"数据形状 {self.values.shape} 与时间/物种不一致")
        self.seeds = list(seeds) if seeds is not None else list(range(self.values.shape[0]))
        self.label = label
        self.transform = transform
        self.visible = list(visible) if visible is not None else list(self.species)
        unknown = set(self.visible) - set(self.species)
        if unknown:
            raise DomainError(f"可见物种不在数据集中: {sorted(unknown)}")

    @classmethod
    def from_trajectories(cls, trajectories: Sequence[Trajectory], label: Optional[float] = None) -> "EnsembleDataset":
        if not trajectories:
            raise DomainError("轨迹列表为空")
        first = trajectories[0]
        for trajectory in trajectories[1:]:
            if trajectory.species != first.species or len(trajectory.times) != len(first.times) \
                    or not np.allclose(trajectory.times, first.times, atol=GRID_TOLERANCE):
                raise DomainError(f"轨迹 {trajectory.seed} 的时间网格或物种与其他轨迹不一致")
        values = np.stack([t.counts for t in trajectories]).astype(float)
        return cls(first.times, values, first.species, [t.seed for t in trajectories], label)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_times(self) -> int:
        return self.values.shape[1]

    @property
    def visible_indices(self) -> List[int]:
        return [self.species.index(s) for s in self.visible]

    def _copy(self, **changes) -> "EnsembleDataset":
        fields = dict(times=self.times, values=self.values, species=self.species, seeds=self.seeds,
                      label=self.label, transform=self.transform, visible=self.visible)
        fields.update(changes)
        return EnsembleDataset(**fields)

    def column(self, name: str) -> np.ndarray:
        """单个物种的 (M, T) 矩阵"""
        if name not in self.species:
            raise DomainError(f"数据集中没有物种: {name}")
        return self.values[:, :, self.species.index(name)]

    def time_index(self, t: float) -> int:
        """时间点在网格上的下标"""
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > GRID_TOLERANCE * max(1.0, abs(t)):
            raise DomainError(f"时间 {t} 不在数据网格上")
        return k

    def data_matrix_at(self, t: float) -> np.ndarray:
        """M × N_v 数据矩阵，列为声明的可见物种"""
        return self.values[:, self.time_index(t), :][:, self.visible_indices]

    def visible_values(self) -> np.ndarray:
        """(M, T, N_v) 可见物种数据"""
        return self.values[:, :, self.visible_indices]

    def window(self, t0: float, t1: float) -> "EnsembleDataset":
        """限制到 [t0, t1]"""
        mask = (self.times >= t0 - GRID_TOLERANCE) & (self.times <= t1 + GRID_TOLERANCE)
        if not np.any(mask):
            raise DomainError(f"时间窗口 [{t0}, {t1}] 内没有数据")
        return self._copy(times=self.times[mask], values=self.values[:, mask, :])

    def with_visible(self, names: Sequence[str]) -> "EnsembleDataset":
        return self._copy(visible=list(names))

    def with_receptor_total(self, states: Sequence[str], name: str = RECEPTOR_TOTAL) -> "EnsembleDataset":
        """追加受体总数列（各受体状态计数之和）"""
        if name in self.species:
            return self
        total = sum(self.column(s) for s in states)
        values = np.concatenate([self.values, total[:, :, None]], axis=2)
        return self._copy(values=values, species=self.species + [name])

    def trajectories(self) -> List[Trajectory]:
        return [Trajectory(self.times, self.values[i], self.species, seed) for i, seed in enumerate(self.seeds)]

    def save(self, directory: str, metadata: Optional[Dict[str, Any]] = None) -> List[str]:
        """写入集合目录：每条轨迹一个 CSV 加 manifest.json

        Returns:
            写入的文件路径（清单在最后）
        """
        os.makedirs(directory, exist_ok=True)
        files = []
        for trajectory in self.trajectories():
            name = f"traj_{trajectory.seed}.csv"
            frame = trajectory.to_frame()
            if self.transform is None:
                frame[self.species] = frame[self.species].round().astype(np.int64)
            frame.to_csv(os.path.join(directory, name), index=False)
            files.append(name)
        manifest = {
            "files": files,
            "species": self.species,
            "visible": self.visible,
            "label": self.label,
            "base_seed": min(self.seeds) if self.seeds else None,
            "transform": self.transform.to_dict() if self.transform else None,
        }
        manifest.update(metadata or {})
        manifest_path = os.path.join(directory, "manifest.json")
        with open(manifest_path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
        logger.info(f"集合已写入 {directory}: {len(files)} 条轨迹")
        return [os.path.join(directory, f) for f in files] + [manifest_path]

    @classmethod
    def load(cls, directory: str) -> "EnsembleDataset":
        manifest_path = os.path.join(directory, "manifest.json")
        if not os.path.exists(manifest_path):
            raise DomainError(f"集合目录缺少 manifest.json: {directory}")
        with open(manifest_path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
        trajectories = [Trajectory.from_csv(os.path.join(directory, f)) for f in manifest["files"]]
        dataset = cls.from_trajectories(trajectories, label=manifest.get("label"))
        transform = manifest.get("transform")
        return dataset._copy(visible=manifest.get("visible") or dataset.species,
                             transform=StandardizingTransform.from_dict(transform) if transform else None)

    def __repr__(self) -> str:
        return f"EnsembleDataset(M={self.n_samples}, T={self.n_times}, species={self.species}, label={self.label})"


def fit_transform(boundary_datasets: Sequence[EnsembleDataset], species: Optional[Sequence[str]] = None,
                  window: Optional[Tuple[float, float]] = None) -> StandardizingTransform:
    """在全部边界数据集上按时间与样本合并计算 (m, v)

    Args:
        boundary_datasets: 参数范围两端的集合
        species: 参与变换的物种，默认取第一个数据集的全部物种
        window: 可选的时间窗口

    Raises:
        DomainError: 没有数据或物种不一致
    """
    if not boundary_datasets:
        raise DomainError("至少需要一个数据集")
    species = list(species or boundary_datasets[0].species)
    pooled = []
    for dataset in boundary_datasets:
        missing = set(species) - set(dataset.species)
        if missing:
            raise DomainError(f"数据集缺少物种: {sorted(missing)}")
        if window is not None:
            dataset = dataset.window(*window)
        index = [dataset.species.index(s) for s in species]
        pooled.append(dataset.values[:, :, index].reshape(-1, len(species)))
    data = np.concatenate(pooled, axis=0)
    if data.shape[0] == 0:
        raise DomainError("数据为空")
    m = data.mean(axis=0)
    v = ((data - m) ** 2).mean(axis=0)
    logger.info(f"标准化变换: 物种 {species}, 样本数 {data.shape[0]}")
    return StandardizingTransform(species, m, v)


def apply_transform(ds: EnsembleDataset, tr: StandardizingTransform) -> EnsembleDataset:
    """y = (x − m)/√v，仅作用于变换覆盖的物种"""
    missing = set(tr.species) - set(ds.species)
    if missing:
        raise DomainError(f"数据集缺少变换物种: {sorted(missing)}")
    index = [ds.species.index(s) for s in tr.species]
    values = ds.values.copy()
    values[:, :, index] = tr.apply(values[:, :, index])
    return ds._copy(values=values, transform=tr)


def invert_transform(ds: EnsembleDataset) -> EnsembleDataset:
    """apply_transform 的逆"""
    if ds.transform is None:
        return ds
    tr = ds.transform
    index = [ds.species.index(s) for s in tr.species]
    values = ds.values.copy()
    values[:, :, index] = tr.invert(values[:, :, index])
    return ds._copy(values=values, transform=None)


def pooled_moments(ds: EnsembleDataset, species: Sequence[str]) -> pd.DataFrame:
    """按物种的合并均值与方差（诊断用）"""
    index = [ds.species.index(s) for s in species]
    data = ds.values[:, :, index].reshape(-1, len(index))
    return pd.DataFrame({"species": list(species), "mean": data.mean(axis=0), "var": data.var(axis=0)})
