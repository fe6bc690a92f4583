#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
学习模型的积分与观测量重构
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Protocol, Sequence

import numpy as np
import pandas as pd
import torch

from ..candidates.moments import standard_to_gaussian
from ..candidates.transforms import standard_to_param_rhs
from ..data.dataset import StandardizingTransform
from ..errors import DomainError, RolloutFault
from ..reduction.pca import ParameterSeries, split_standard_vector

logger = logging.getLogger("rollout")

GRID_TOLERANCE = 1e-9


class RateModel(Protocol):
    def predict(self, theta_hat: np.ndarray, t) -> np.ndarray: ...


def euler_rollout(model: RateModel, theta0: np.ndarray, t0: float, t_end: float, dt: float = 0.1,
                  q: Optional[int] = None, species: Optional[Sequence[str]] = None,
                  label: Optional[float] = None) -> ParameterSeries:
    """显式欧拉积分 θ̂_{k+1} = θ̂_k + dt·F̂(θ̂_k, t_k)

    每步之后把 σ² 投影到 [0, ∞)，重构的协方差 ŴŴᵀ + σ²I 因此始终半正定。

    Args:
        model: 提供 predict(θ̂, t) 的模型（推理模式）
        theta0: 初值 θ̂(t0)
        t0: 起始时间
        t_end: 终止时间
        dt: 步长，默认与数据网格一致
        q: 隐变量数，默认取 model.spec.latent_dim

    Raises:
        DomainError: dt 非正或 t_end < t0，或初值 σ² 为负
        RolloutFault: 状态出现非有限值，携带步数
    """
    if not dt > 0:
        raise DomainError(f"步长必须为正: {dt}")
    if t_end < t0:
        raise DomainError(f"终止时间 {t_end} 早于起始时间 {t0}")
    q = q if q is not None else model.spec.latent_dim
    n_steps = int(round((t_end - t0) / dt))
    theta = np.array(theta0, dtype=float)
    if theta[-1] < 0:
        raise DomainError(f"初值的 σ² 不能为负: {theta[-1]}")
    projected = 0
    rows = [theta.copy()]
    times = t0 + dt * np.arange(n_steps + 1)
    for step in range(n_steps):
        rate = np.asarray(model.predict(theta, times[step]), dtype=float)
        theta = theta + dt * rate
        if not np.all(np.isfinite(theta)):
            logger.error(f"积分在第 {step + 1} 步出现非有限值 (t={times[step + 1]:.4g})")
            raise RolloutFault(step + 1)
        if theta[-1] < 0.0:
            theta[-1] = 0.0
            projected += 1
        rows.append(theta.copy())
    if projected:
        logger.warning(f"积分中 σ² 有 {projected} 步被截断到 0: label={label}")
    logger.info(f"积分完成: label={label}, 步数 {n_steps}, dt={dt}")
    return ParameterSeries(times, np.stack(rows), q, species, label)


def mse(series: ParameterSeries, reference: ParameterSeries) -> float:
    """(1/T) Σ_t ‖θ̂_int(t) − θ̂_ML(t)‖²

    Raises:
        DomainError: 时间网格或维度不一致
    """
    if len(series) != len(reference) or series.dim != reference.dim:
        raise DomainError(f"参数序列形状不一致: {series.matrix.shape} vs {reference.matrix.shape}")
    tolerance = GRID_TOLERANCE * max(1.0, float(np.max(np.abs(reference.times))))
    if np.max(np.abs(series.times - reference.times)) > tolerance:
        raise DomainError("两个参数序列的时间网格不一致")
    diff = series.matrix - reference.matrix
    return float(np.mean(np.sum(diff * diff, axis=1)))


@dataclass
class ObservableSeries:
    """可见物种的均值 (T, N_v) 与协方差 (T, N_v, N_v)，计数单位"""
    times: np.ndarray
    mean: np.ndarray
    cov: np.ndarray
    species: List[str]

    def to_frame(self) -> pd.DataFrame:
        """表头 t, mean_<s>..., var_<s>..."""
        frame = pd.DataFrame({"t": self.times})
        for i, name in enumerate(self.species):
            frame[f"mean_{name}"] = self.mean[:, i]
        for i, name in enumerate(self.species):
            frame[f"var_{name}"] = self.cov[:, i, i]
        return frame


def reconstruct_observables(series: ParameterSeries,
                            transform: Optional[StandardizingTransform] = None) -> ObservableSeries:
    """θ̂(t) → 可见物种的高斯均值与协方差，再逆标准化到计数单位

    μ_h = 0、Σ_h = I 下 μ_v = b̂，C_v = ŴŴᵀ + σ²I。
    """
    b_hat, w_hat, sigma2 = split_standard_vector(series.matrix, series.q)
    n = series.n_visible
    cov = w_hat @ np.swapaxes(w_hat, -1, -2) + sigma2[:, None, None] * np.eye(n)
    mean = b_hat.copy()
    if transform is not None:
        if len(transform.species) != n:
            raise DomainError(f"变换物种数 {len(transform.species)} 与可见物种数 {n} 不一致")
        mean = transform.invert(mean)
        cov = transform.invert_covariance(cov)
    return ObservableSeries(series.times.copy(), mean, 0.5 * (cov + np.swapaxes(cov, -1, -2)), list(series.species))


def nonnegative_fraction(observables: ObservableSeries) -> pd.DataFrame:
    """每个物种重构均值非负的时间比例（诊断量，不作断言）"""
    fraction = np.mean(observables.mean >= 0.0, axis=0)
    return pd.DataFrame({"species": observables.species, "nonnegative_fraction": fraction})


def minimum_covariance_eigenvalue(observables: ObservableSeries) -> np.ndarray:
    """每个时间点重构协方差的最小特征值"""
    return np.linalg.eigvalsh(observables.cov)[:, 0]


def moment_term_decomposition(model, series: ParameterSeries, species_index: int) -> pd.DataFrame:
    """可见物种均值导数按参数分解

    ⟨n_i⟩ = b_i + Σ_k W_ik μ_h,k，故
        d⟨n_i⟩/dt = F_b,i + Σ_k F_W,ik μ_h,k + Σ_k W_ik F_μh,k
    σ² 与 Σ_h 对均值无贡献。F̂ 来自模型，F_μh、F_Σh 来自隐变量傅里叶级数的导数。
    结果为标准化单位。

    Returns:
        表头 t, term_b, term_W, term_sigma2, term_mu_h, term_Sigma_h, total
    """
    q = series.q
    if not 0 <= species_index < series.n_visible:
        raise DomainError(f"物种下标 {species_index} 超出可见物种数 {series.n_visible}")
    with torch.no_grad():
        theta_hat = torch.as_tensor(series.matrix, dtype=torch.float64)
        times = torch.as_tensor(series.times, dtype=torch.float64)
        f_hat = model.forward(theta_hat, times, train_mode=False)
        mu_h, sigma_h = model.lf(times)
        d_mu_h, d_sigma_h = model.lf.derivative(times)
        theta = standard_to_gaussian(theta_hat, mu_h, sigma_h, q)
        rates = standard_to_param_rhs(f_hat, theta, d_mu_h, d_sigma_h, q)
        i = species_index
        term_b = rates.f_b[:, i].numpy()
        term_w = torch.sum(rates.f_w[:, i, :] * theta.mu_h, dim=-1).numpy()
        term_mu_h = torch.sum(theta.w[:, i, :] * rates.f_mu_h, dim=-1).numpy()
    zeros = np.zeros(len(series))
    return pd.DataFrame({
        "t": series.times,
        "term_b": term_b,
        "term_W": term_w,
        "term_sigma2": zeros,
        "term_mu_h": term_mu_h,
        "term_Sigma_h": zeros,
        "total": term_b + term_w + term_mu_h,
    })
