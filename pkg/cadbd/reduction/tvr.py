#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
全变差正则化求导

在积分变量 w（w_0 = z_0 固定，u = diff(w)/dt）上最小化
    α Σ sqrt((Δu)² + ε) + ½‖w − z‖²
滞后扩散迭代中每一步都是五对角正定线性系统，用带状 Cholesky 直接求解。
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import pandas as pd
from scipy import linalg, sparse

from ..errors import DerivativeFault, DomainError
from .pca import ParameterSeries

logger = logging.getLogger("tvr_diff")


@dataclass(frozen=True)
class TvrConfig:
    """TVR 求导配置"""
    alpha: float = 100.0
    iterations: int = 10
    dt: float = 0.1
    small_threshold: float = 1e-5
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.alpha < 0:
            raise DomainError(f"alpha 不能为负: {self.alpha}")
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise DomainError(f"迭代次数必须 >= 1: {self.iterations}")
        if self.dt <= 0:
            raise DomainError(f"dt 必须为正: {self.dt}")
        if self.small_threshold < 0 or self.epsilon <= 0:
            raise DomainError("阈值不能为负，ε 必须为正")


@dataclass
class TvrResult:
    derivative: np.ndarray
    integrated: np.ndarray
    objective_history: List[float] = field(default_factory=list)


def _second_difference(t: int) -> sparse.csr_matrix:
    """(T−2) × T 的二阶差分矩阵"""
    return sparse.diags([1.0, -2.0, 1.0], [0, 1, 2], shape=(t - 2, t), format="csr")


def _objective(w: np.ndarray, z: np.ndarray, d2: sparse.csr_matrix, alpha: float, dt: float, eps: float) -> float:
    du = d2 @ w / dt
    return float(alpha * np.sum(np.sqrt(du * du + eps)) + 0.5 * np.sum((w - z) ** 2))


def tvr_solve(z: np.ndarray, cfg: TvrConfig) -> TvrResult:
    """TVR 求导，返回导数、对应的积分序列与目标函数历史

    Raises:
        DomainError: 长度不足 3 或含非有限值
        DerivativeFault: 某次迭代后目标函数上升
    """
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or len(z) < 3:
        raise DomainError(f"序列长度必须 >= 3: {z.shape}")
    if not np.all(np.isfinite(z)):
        raise DomainError("序列含非有限值")
    t, dt = len(z), cfg.dt
    scale = float(np.max(np.abs(np.diff(z)))) / dt
    if scale == 0.0:
        return TvrResult(np.zeros(t), z.copy(), [0.0])

    # ε 随导数尺度平方缩放，保证 c·z 与 c·α 下的解恰为 c 倍
    eps = cfg.epsilon * scale * scale
    d2 = _second_difference(t)
    coupling = cfg.alpha / (dt * dt)
    w = z.copy()
    history = [_objective(w, z, d2, cfg.alpha, dt, eps)]
    for iteration in range(int(cfg.iterations)):
        du = d2 @ w / dt
        weights = 1.0 / np.sqrt(du * du + eps)
        stiffness = (d2.T @ sparse.diags(weights) @ d2).tocsr()
        free = stiffness[1:, 1:].todia()
        n = t - 1
        bands = np.zeros((3, n))
        bands[2, :] = 1.0 + coupling * free.diagonal(0)
        bands[1, 1:] = coupling * free.diagonal(1)
        bands[0, 2:] = coupling * free.diagonal(2)
        rhs = z[1:] - coupling * stiffness[1:, 0].toarray().ravel() * z[0]
        w = np.concatenate([[z[0]], linalg.solveh_banded(bands, rhs)])
        history.append(_objective(w, z, d2, cfg.alpha, dt, eps))
        if history[-1] > history[-2] * (1 + 1e-10) + 1e-300:
            logger.error(f"TVR 目标函数在第 {iteration + 1} 次迭代上升: {history[-2]} -> {history[-1]}")
            raise DerivativeFault(iteration + 1, history[-2], history[-1])

    derivative = np.empty(t)
    derivative[:-1] = np.diff(w) / dt
    derivative[-1] = derivative[-2]
    derivative[np.abs(derivative) < cfg.small_threshold] = 0.0
    return TvrResult(derivative, w, history)


def tvr_derivative(z: np.ndarray, cfg: TvrConfig) -> np.ndarray:
    """TVR 导数；|ż| 小于阈值的分量置零"""
    return tvr_solve(z, cfg).derivative


def antidifferentiate(zdot: np.ndarray, z0: float, dt: float) -> np.ndarray:
    """累积欧拉求和 z_{k+1} = z_k + dt·ż_k，z_0 = z0"""
    zdot = np.asarray(zdot, dtype=float)
    out = np.empty(len(zdot))
    out[0] = z0
    out[1:] = z0 + dt * np.cumsum(zdot[:-1])
    return out


@dataclass
class TrainingPairs:
    """训练对：平滑输入 θ̂^integrated(t) 与目标 dθ̂/dt，形状均为 (T, D̂)

    首尾两个导数样本不进入训练（见 interior）。
    """
    times: np.ndarray
    inputs: np.ndarray
    targets: np.ndarray
    q: int
    label: Optional[float] = None

    def interior(self) -> "TrainingPairs":
        return TrainingPairs(self.times[1:-1], self.inputs[1:-1], self.targets[1:-1], self.q, self.label)

    def __len__(self) -> int:
        return len(self.times)

    def to_frame(self, columns: Optional[List[str]] = None) -> pd.DataFrame:
        """表头 t, in_<col>..., d_<col>..."""
        dim = self.inputs.shape[1]
        columns = columns or [f"p{k + 1}" for k in range(dim)]
        frame = pd.DataFrame({"t": self.times})
        for k, name in enumerate(columns):
            frame[f"in_{name}"] = self.inputs[:, k]
        for k, name in enumerate(columns):
            frame[f"d_{name}"] = self.targets[:, k]
        return frame

    def to_csv(self, path: str, columns: Optional[List[str]] = None) -> None:
        self.to_frame(columns).to_csv(path, index=False)

    @classmethod
    def from_csv(cls, path: str, q: int, label: Optional[float] = None) -> "TrainingPairs":
        frame = pd.read_csv(path)
        inputs = [c for c in frame.columns if c.startswith("in_")]
        targets = [c for c in frame.columns if c.startswith("d_")]
        if len(inputs) != len(targets) or not inputs:
            raise DomainError(f"训练对表头不完整: {list(frame.columns)}")
        return cls(frame["t"].to_numpy(dtype=float), frame[inputs].to_numpy(dtype=float),
                   frame[targets].to_numpy(dtype=float), q, label)


def build_training_pairs(series: ParameterSeries, cfg: TvrConfig) -> TrainingPairs:
    """逐分量 TVR 求导得到目标，再从 θ̂_ML(t₁) 出发反积分得到平滑输入"""
    if len(series) < 3:
        raise DomainError(f"至少需要 3 个时间点: {len(series)}")
    spacing = np.diff(series.times)
    if np.max(np.abs(spacing - cfg.dt)) > 1e-6 * cfg.dt:
        raise DomainError(f"参数序列网格间距与 TVR dt={cfg.dt} 不一致")
    targets = np.empty_like(series.matrix)
    inputs = np.empty_like(series.matrix)
    for k in range(series.dim):
        targets[:, k] = tvr_derivative(series.matrix[:, k], cfg)
        inputs[:, k] = antidifferentiate(targets[:, k], series.matrix[0, k], cfg.dt)
    logger.info(f"训练对构建完成: label={series.label}, T={len(series)}, D̂={series.dim}")
    return TrainingPairs(series.times.copy(), inputs, targets, series.q, series.label)
