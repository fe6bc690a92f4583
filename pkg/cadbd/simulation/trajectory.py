#!/usr/bin/env python
# -*- coding: utf-8 -*-

from dataclasses import dataclass
from typing import List

import numpy as np
import pandas as pd

from ..errors import DomainError


@dataclass
class Trajectory:
    """单条随机轨迹：均匀时间网格上的物种计数"""
    times: np.ndarray
    counts: np.ndarray
    species: List[str]
    seed: int

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.counts = np.asarray(self.counts)
        if self.counts.shape != (len(self.times), len(self.species)):
            raise DomainError(f"计数矩阵形状 {self.counts.shape} 与时间/物种不一致")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise DomainError("轨迹时间必须严格递增")

    def column(self, name: str) -> np.ndarray:
        return self.counts[:, self.species.index(name)]

    def to_frame(self) -> pd.DataFrame:
        """表头为 t,<species...>,seed"""
        frame = pd.DataFrame(self.counts, columns=self.species)
        frame.insert(0, "t", self.times)
        frame["seed"] = int(self.seed)
        return frame

    def to_csv(self, path: str) -> None:
        self.to_frame().to_csv(path, index=False)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "Trajectory":
        if "t" not in frame.columns or "seed" not in frame.columns:
            raise DomainError("轨迹表缺少 t 或 seed 列")
        species = [c for c in frame.columns if c not in ("t", "seed")]
        seed = int(frame["seed"].iloc[0]) if len(frame) else 0
        return cls(frame["t"].to_numpy(dtype=float), frame[species].to_numpy(), species, seed)

    @classmethod
    def from_csv(cls, path: str) -> "Trajectory":
        return cls.from_frame(pd.read_csv(path))
