#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
概率 PCA 降阶模型

逐时间点的最大似然估计，以及标准参数 θ̂ = {b̂, Ŵ, σ²}
与完整参数 θ = {b, W, σ², μ_h, Σ_h} 之间的换算。
标准参数向量的排列为 [b̂ (N), Ŵ 按行展开 (N·q), σ²]。
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy import linalg, stats

from ..data.dataset import EnsembleDataset
from ..errors import DomainError

logger = logging.getLogger("pca_ml")

TIE_TOLERANCE = 1e-12


def standard_dim(n_visible: int, q: int) -> int:
    """D̂ = N_v + N_v·q + 1"""
    return n_visible + n_visible * q + 1


def visible_from_dim(dim: int, q: int) -> int:
    """由 D̂ 与 q 反推 N_v"""
    n, rem = divmod(dim - 1, 1 + q)
    if rem or n < 1:
        raise DomainError(f"维度 {dim} 与潜变量数 {q} 不相容")
    return n


def split_standard_vector(vec, q: int):
    """把 (..., D̂) 向量拆成 (b̂, Ŵ, σ²)；numpy 数组与 torch 张量通用"""
    n = visible_from_dim(vec.shape[-1], q)
    b = vec[..., :n]
    w = vec[..., n:n + n * q].reshape(tuple(vec.shape[:-1]) + (n, q))
    return b, w, vec[..., -1]


@dataclass
class StandardParams:
    """标准参数 θ̂（μ_h = 0, Σ_h = I）"""
    b_hat: np.ndarray
    w_hat: np.ndarray
    sigma2: float

    def __post_init__(self):
        self.b_hat = np.asarray(self.b_hat, dtype=float)
        self.w_hat = np.asarray(self.w_hat, dtype=float).reshape(len(self.b_hat), -1)
        self.sigma2 = float(self.sigma2)

    @property
    def n_visible(self) -> int:
        return len(self.b_hat)

    @property
    def latent_dim(self) -> int:
        return self.w_hat.shape[1]

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.b_hat, self.w_hat.reshape(-1), [self.sigma2]])

    @classmethod
    def from_vector(cls, vec: np.ndarray, q: int) -> "StandardParams":
        b, w, s2 = split_standard_vector(np.asarray(vec, dtype=float), q)
        return cls(b.copy(), w.copy(), float(s2))


@dataclass
class FullParams:
    """完整参数 θ；sigma_h 为 Σ_h 的对角元"""
    b: np.ndarray
    w: np.ndarray
    sigma2: float
    mu_h: np.ndarray
    sigma_h: np.ndarray


@dataclass
class MomentState:
    """观测量 φ = {μ, C}，前 n_visible 个分量为可见物种"""
    mu: np.ndarray
    cov: np.ndarray
    n_visible: int

    @property
    def visible_mean(self) -> np.ndarray:
        return self.mu[..., :self.n_visible]

    @property
    def visible_cov(self) -> np.ndarray:
        return self.cov[..., :self.n_visible, :self.n_visible]


def latent_diagonal(sigma_h, q: Optional[int] = None) -> np.ndarray:
    """Σ_h 的对角元；接受向量或对角矩阵，非对角或非正时报错"""
    sigma_h = np.asarray(sigma_h, dtype=float)
    if sigma_h.ndim == 2:
        off = sigma_h - np.diag(np.diag(sigma_h))
        if np.any(off != 0):
            raise DomainError("Σ_h 必须为对角矩阵")
        sigma_h = np.diag(sigma_h)
    sigma_h = np.atleast_1d(sigma_h)
    if q is not None and sigma_h.shape != (q,):
        raise DomainError(f"Σ_h 维度 {sigma_h.shape} 与 q={q} 不一致")
    if np.any(sigma_h <= 0) or not np.all(np.isfinite(sigma_h)):
        raise DomainError(f"Σ_h 对角元必须为正: {sigma_h}")
    return sigma_h


def _sign_adjust(u: np.ndarray) -> np.ndarray:
    """使 uᵀ1 >= 0；恰为 0 时令第一个非零分量为正"""
    total = u.sum()
    if total < 0:
        return -u
    if total == 0:
        nonzero = np.flatnonzero(u)
        if nonzero.size and u[nonzero[0]] < 0:
            return -u
    return u


def sorted_eigen(cov: np.ndarray):
    """特征值降序排列；并列时按符号调整后特征向量的字典序"""
    values, vectors = linalg.eigh(cov)
    vectors = np.stack([_sign_adjust(vectors[:, k]) for k in range(vectors.shape[1])], axis=1)
    scale = max(1.0, float(np.max(np.abs(values)))) if values.size else 1.0
    keys = []
    for k in range(len(values)):
        # 把几乎相等的特征值归并到同一档，档内按向量字典序
        rounded = np.round(values[k] / (scale * TIE_TOLERANCE))
        keys.append((-rounded, tuple(vectors[:, k])))
    order = sorted(range(len(values)), key=lambda k: keys[k])
    return values[order], vectors[:, order]


def ml_estimate_from_covariance(mean: np.ndarray, cov: np.ndarray, q: int) -> StandardParams:
    """由均值与协方差直接给出 ML 解"""
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    n = len(mean)
    if not 1 <= q < n:
        raise DomainError(f"潜变量数必须满足 1 <= q < N_v: q={q}, N_v={n}")
    values, vectors = sorted_eigen(cov)
    sigma2 = max(float(np.mean(values[q:])), 0.0)
    scale = np.sqrt(np.clip(values[:q] - sigma2, 0.0, None))
    return StandardParams(mean.copy(), vectors[:, :q] * scale[None, :], sigma2)


def ml_estimate(x: np.ndarray, q: int, variance_floor: Optional[Mapping[int, float]] = None) -> StandardParams:
    """单个时间点的 PPCA 最大似然估计

    Args:
        x: M × N_v 数据矩阵
        q: 潜变量数
        variance_floor: 下标 -> 替换的协方差对角元

    Raises:
        DomainError: q 越界、样本不足或数据含非有限值
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise DomainError(f"数据矩阵必须是二维的: {x.shape}")
    m, n = x.shape
    if not 1 <= q < n:
        raise DomainError(f"潜变量数必须满足 1 <= q < N_v: q={q}, N_v={n}")
    if m < 2:
        raise DomainError(f"至少需要 2 个样本: M={m}")
    if not np.all(np.isfinite(x)):
        raise DomainError("数据含非有限值")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / m
    for i, value in (variance_floor or {}).items():
        cov[int(i), int(i)] = float(value)
    return ml_estimate_from_covariance(mean, cov, q)


def log_likelihood(x: np.ndarray, theta: StandardParams) -> float:
    """数据在 N(b̂, ŴŴᵀ + σ²I) 下的对数似然"""
    cov = theta.w_hat @ theta.w_hat.T + theta.sigma2 * np.eye(theta.n_visible)
    return float(np.sum(stats.multivariate_normal.logpdf(x, mean=theta.b_hat, cov=cov, allow_singular=True)))


def to_full(theta_hat: StandardParams, mu_h, sigma_h) -> FullParams:
    """θ̂ → θ：W = ŴΣ_h^{-1/2}, b = b̂ − ŴΣ_h^{-1/2}μ_h"""
    q = theta_hat.latent_dim
    sigma_h = latent_diagonal(sigma_h, q)
    mu_h = np.asarray(mu_h, dtype=float).reshape(q)
    w = theta_hat.w_hat / np.sqrt(sigma_h)[None, :]
    b = theta_hat.b_hat - w @ mu_h
    return FullParams(b, w, theta_hat.sigma2, mu_h.copy(), sigma_h.copy())


def to_standard(theta: FullParams) -> StandardParams:
    """θ → θ̂：b̂ = b + Wμ_h, Ŵ = WΣ_h^{1/2}"""
    sigma_h = latent_diagonal(theta.sigma_h)
    return StandardParams(theta.b + theta.w @ theta.mu_h, theta.w * np.sqrt(sigma_h)[None, :], theta.sigma2)


def moments_from(theta: FullParams) -> MomentState:
    """高斯分布的均值与协方差

    μ = (b + Wμ_h; μ_h)，C = [[WΣ_hWᵀ + σ²I, WΣ_h], [Σ_hWᵀ, Σ_h]]
    """
    sigma_h = latent_diagonal(theta.sigma_h)
    w = np.asarray(theta.w, dtype=float)
    n, q = w.shape
    c_vh = w * sigma_h[None, :]
    c_v = c_vh @ w.T + theta.sigma2 * np.eye(n)
    cov = np.block([[c_v, c_vh], [c_vh.T, np.diag(sigma_h)]])
    mu = np.concatenate([theta.b + w @ theta.mu_h, theta.mu_h])
    return MomentState(mu, 0.5 * (cov + cov.T), n)


class ParameterSeries:
    """θ̂(t) 时间序列，matrix 形状为 (T, D̂)"""

    def __init__(self, times: np.ndarray, matrix: np.ndarray, q: int, species: Optional[Sequence[str]] = None,
                 label: Optional[float] = None):
        self.times = np.asarray(times, dtype=float)
        self.matrix = np.asarray(matrix, dtype=float)
        self.q = int(q)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != len(self.times):
            raise DomainError(f"参数矩阵形状 {self.matrix.shape} 与时间长度 {len(self.times)} 不一致")
        self.n_visible = visible_from_dim(self.matrix.shape[1], self.q)
        self.species = list(species) if species is not None else [f"v{i + 1}" for i in range(self.n_visible)]
        self.label = label

    def __len__(self) -> int:
        return len(self.times)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def at(self, k: int) -> StandardParams:
        return StandardParams.from_vector(self.matrix[k], self.q)

    def index_of(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise DomainError(f"时间 {t} 不在参数序列网格上")
        return k

    def columns(self) -> List[str]:
        n, q = self.n_visible, self.q
        return ([f"b_{i + 1}" for i in range(n)]
                + [f"W_{i + 1}{k + 1}" for i in range(n) for k in range(q)]
                + ["sigma2"])

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.matrix, columns=self.columns())
        frame.insert(0, "t", self.times)
        return frame

    def to_csv(self, path: str) -> None:
        self.to_frame().to_csv(path, index=False)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, species: Optional[Sequence[str]] = None,
                   label: Optional[float] = None) -> "ParameterSeries":
        n = sum(1 for c in frame.columns if c.startswith("b_"))
        n_w = sum(1 for c in frame.columns if c.startswith("W_"))
        if n == 0 or n_w % n or "sigma2" not in frame.columns:
            raise DomainError(f"参数表表头不完整: {list(frame.columns)}")
        data = frame.drop(columns=["t"]).to_numpy(dtype=float)
        return cls(frame["t"].to_numpy(dtype=float), data, n_w // n, species, label)

    @classmethod
    def from_csv(cls, path: str, species: Optional[Sequence[str]] = None,
                 label: Optional[float] = None) -> "ParameterSeries":
        return cls.from_frame(pd.read_csv(path), species, label)


def resolve_variance_floor(variance_floor: Optional[Mapping[Union[str, int], float]],
                           species: Sequence[str]) -> Dict[int, float]:
    """把 物种名/下标 -> 值 统一为下标映射"""
    resolved = {}
    for key, value in (variance_floor or {}).items():
        if isinstance(key, str):
            if key not in species:
                raise DomainError(f"方差下限指定了未知物种: {key}")
            key = list(species).index(key)
        resolved[int(key)] = float(value)
    return resolved


def estimate_series(ds: EnsembleDataset, q: int,
                    variance_floor: Optional[Mapping[Union[str, int], float]] = None) -> ParameterSeries:
    """对每个时间点独立做 ML 估计"""
    floor = resolve_variance_floor(variance_floor, ds.visible)
    data = ds.visible_values()
    rows = [ml_estimate(data[:, k, :], q, floor).to_vector() for k in range(ds.n_times)]
    logger.info(f"参数序列估计完成: label={ds.label}, T={ds.n_times}, N_v={len(ds.visible)}, q={q}")
    return ParameterSeries(ds.times, np.stack(rows), q, ds.visible, ds.label)
