#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
候选输入库

θ̂(t) → θ(t)（傅里叶隐变量）→ φ → 每个基元的闭合矩导数 → dθ/dt → dθ̂/dt，
每个基元得到一个 D̂ 维块，按基元顺序拼接。
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Sequence, Union

import numpy as np
import torch

from ..errors import DomainError
from ..reduction.pca import ParameterSeries, standard_dim
from .fourier import LatentFourier
from .moments import as_tensor, closed_moment_rhs, gaussian_moments, standard_to_gaussian
from .motif import ReactionMotif
from .transforms import observables_to_param_rhs, to_standard_rhs

logger = logging.getLogger("candidates")

STD_FLOOR = 1e-12


def candidate_blocks(theta_hat, t, lf: LatentFourier, motifs: Sequence[ReactionMotif]) -> torch.Tensor:
    """候选块张量，形状 (..., |motifs|, D̂)

    Args:
        theta_hat: 标准参数向量 (..., D̂)
        t: 时间，可广播到 theta_hat 的批维度
        lf: 隐变量傅里叶参数
        motifs: 反应基元
    """
    if not motifs:
        raise DomainError("至少需要一个反应基元")
    theta_hat = as_tensor(theta_hat)
    t = torch.broadcast_to(as_tensor(t), theta_hat.shape[:-1])
    mu_h, sigma_h = lf(t)
    theta = standard_to_gaussian(theta_hat, mu_h, sigma_h, lf.q)
    phi = gaussian_moments(theta)
    blocks = []
    for motif in motifs:
        tracked = closed_moment_rhs(motif, phi)
        rates = observables_to_param_rhs(tracked, theta)
        blocks.append(to_standard_rhs(rates, theta).to_vector())
    return torch.stack(blocks, dim=-2)


def candidate_vector(theta_hat, t, lf: LatentFourier, motifs: Sequence[ReactionMotif]) -> torch.Tensor:
    """拼接后的候选向量 (..., |motifs|·D̂)"""
    blocks = candidate_blocks(theta_hat, t, lf, motifs)
    return blocks.reshape(blocks.shape[:-2] + (blocks.shape[-2] * blocks.shape[-1],))


@dataclass
class CandidateStandardization:
    """候选输入的逐分量标准化 (x − μ^inputs)/σ^inputs"""
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.std = np.maximum(np.asarray(self.std, dtype=float), STD_FLOOR)

    def apply(self, values: torch.Tensor) -> torch.Tensor:
        return (values - as_tensor(self.mean)) / as_tensor(self.std)

    def to_dict(self) -> Dict[str, Any]:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CandidateStandardization":
        return cls(data["mean"], data["std"])


def fit_candidate_standardization(series: Union[ParameterSeries, Sequence[ParameterSeries]],
                                  lf_bootstrap: LatentFourier,
                                  motifs: Sequence[ReactionMotif]) -> CandidateStandardization:
    """沿参数序列计算候选向量，取逐分量均值与总体标准差（下限 1e-12）

    Args:
        series: 一个或多个条件的 θ̂(t) 序列，多个时合并
        lf_bootstrap: 自举用的隐变量设置（见 LatentFourier.bootstrap）
        motifs: 反应基元
    """
    series_list = [series] if isinstance(series, ParameterSeries) else list(series)
    if not series_list or sum(len(s) for s in series_list) == 0:
        raise DomainError("参数序列为空")
    with torch.no_grad():
        values = [candidate_vector(s.matrix, s.times, lf_bootstrap, motifs).numpy() for s in series_list]
    data = np.concatenate(values, axis=0)
    logger.info(f"候选标准化: {len(motifs)} 个基元, 样本数 {data.shape[0]}, 维度 {data.shape[1]}")
    return CandidateStandardization(data.mean(axis=0), data.std(axis=0))


def block_dimension(n_visible: int, q: int, motifs: Sequence[ReactionMotif]) -> int:
    return len(motifs) * standard_dim(n_visible, q)
