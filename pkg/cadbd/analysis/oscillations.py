#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
振荡范围

c±(t) = μ(t) ± σ(t) 为集合在各时间点的均值加减标准差，
振荡范围为末尾窗口内 (min c−, max c+)，置信区间由轨迹自助重采样给出。
"""
import logging
from dataclasses import dataclass
from typing import Dict, Mapping, Tuple

import numpy as np
import pandas as pd

from ..data.dataset import GRID_TOLERANCE, EnsembleDataset
from ..errors import DomainError

logger = logging.getLogger("oscillations")


@dataclass
class OscillationRange:
    """单个条件的振荡范围与 95% 置信区间"""
    c_minus_min: float
    c_plus_max: float
    c_minus_ci: Tuple[float, float]
    c_plus_ci: Tuple[float, float]

    @property
    def spread(self) -> float:
        return self.c_plus_max - self.c_minus_min


def _extrema(values: np.ndarray) -> Tuple[float, float]:
    """(M, T) 样本 → (min(μ−σ), max(μ+σ))"""
    mu = values.mean(axis=0)
    sd = values.std(axis=0)
    return float(np.min(mu - sd)), float(np.max(mu + sd))


def window_values(ds: EnsembleDataset, species: str, window: float, scale: float = 1.0) -> np.ndarray:
    """末尾 window 秒内某物种的 (M, T_w) 数据，除以 scale

    Raises:
        DomainError: 窗口非正、超出模拟时长或为空
    """
    if not window > 0:
        raise DomainError(f"时间窗口必须为正: {window}")
    start = ds.times[-1] - window
    if start < ds.times[0] - GRID_TOLERANCE:
        raise DomainError(f"时间窗口 {window} 超出模拟时长 {ds.times[-1] - ds.times[0]}")
    mask = ds.times >= start - GRID_TOLERANCE
    if not np.any(mask):
        raise DomainError("时间窗口内没有数据")
    return ds.column(species)[:, mask] / scale


def oscillation_range(ds: EnsembleDataset, species: str = "Ca_Cyt", window: float = 40.0, scale: float = 1.0,
                      n_boot: int = 1000, confidence: float = 0.95, seed: int = 0) -> OscillationRange:
    """单个集合的振荡范围；百分位自助法置信区间"""
    values = window_values(ds, species, window, scale)
    c_minus, c_plus = _extrema(values)
    m = values.shape[0]
    rng = np.random.default_rng(seed)
    boot = np.empty((n_boot, 2))
    for b in range(n_boot):
        boot[b] = _extrema(values[rng.integers(0, m, size=m)])
    tail = 50.0 * (1.0 - confidence)
    lo, hi = np.percentile(boot, [tail, 100.0 - tail], axis=0)
    return OscillationRange(c_minus, c_plus, (float(lo[0]), float(hi[0])), (float(lo[1]), float(hi[1])))


def range_of_oscillations(ensembles: Mapping[float, EnsembleDataset], species: str = "Ca_Cyt",
                          window: float = 40.0, scale: float = 1.0, n_boot: int = 1000,
                          seed: int = 0) -> pd.DataFrame:
    """按条件计算振荡范围

    Args:
        ensembles: 条件值 -> 集合
        species: 物种名
        window: 末尾窗口长度 (s)
        scale: 计数换算为浓度的除数（每 µM 的粒子数）
        n_boot: 自助重采样次数
        seed: 重采样种子

    Returns:
        表头 label, c_minus_min, c_plus_max, c_minus_lo, c_minus_hi, c_plus_lo, c_plus_hi
    """
    rows = []
    for label, ds in sorted(ensembles.items()):
        result = oscillation_range(ds, species, window, scale, n_boot, seed=seed)
        rows.append({
            "label": label,
            "c_minus_min": result.c_minus_min,
            "c_plus_max": result.c_plus_max,
            "c_minus_lo": result.c_minus_ci[0],
            "c_minus_hi": result.c_minus_ci[1],
            "c_plus_lo": result.c_plus_ci[0],
            "c_plus_hi": result.c_plus_ci[1],
        })
        logger.info(f"振荡范围 label={label}: [{result.c_minus_min:.4g}, {result.c_plus_max:.4g}]")
    return pd.DataFrame(rows)


def learned_range(mean: np.ndarray, var: np.ndarray, times: np.ndarray, window: float = 40.0,
                  scale: float = 1.0) -> Dict[str, float]:
    """由重构的均值与方差序列计算振荡范围（学习模型一侧）"""
    mask = times >= times[-1] - window - GRID_TOLERANCE
    if not np.any(mask):
        raise DomainError("时间窗口内没有数据")
    sd = np.sqrt(np.clip(var[mask], 0.0, None))
    mu = mean[mask]
    return {"c_minus_min": float(np.min(mu - sd)) / scale, "c_plus_max": float(np.max(mu + sd)) / scale}
