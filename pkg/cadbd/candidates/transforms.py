#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
观测量导数 → 参数导数 → 标准参数导数

由 μ_v = b + Wμ_h、C_vh = WΣ_h、Tr C_v = Tr(WΣ_hWᵀ) + N_v σ² 对时间求导并反解：
    F_W  = (dC_vh − W dΣ_h) Σ_h⁻¹
    F_b  = dμ_v − F_W μ_h − W F_μh
    F_σ² = (dTr C_v − Σ_ik (2 F_W,ik Σ_k W_ik + W_ik² dΣ_k)) / N_v
再由 b̂ = b + Wμ_h、Ŵ = WΣ_h^{1/2} 换到标准参数空间（Σ_h 须为对角）。
"""
from typing import NamedTuple, Union

import torch

from ..errors import DomainError
from ..reduction.pca import FullParams, split_standard_vector
from .moments import GaussianParams, TrackedRates, as_tensor, gaussian_params


class ParamRates(NamedTuple):
    """dθ/dt 的各分量"""
    f_b: torch.Tensor
    f_w: torch.Tensor
    f_sigma2: torch.Tensor
    f_mu_h: torch.Tensor
    f_sigma_h: torch.Tensor


class StandardRates(NamedTuple):
    """dθ̂/dt = (F̂_b̂, F̂_Ŵ, F̂_σ²)"""
    f_b_hat: torch.Tensor
    f_w_hat: torch.Tensor
    f_sigma2: torch.Tensor

    def to_vector(self) -> torch.Tensor:
        """按标准参数向量排列 [b̂, Ŵ 行展开, σ²]"""
        n, q = self.f_w_hat.shape[-2:]
        f_w = self.f_w_hat.reshape(self.f_w_hat.shape[:-2] + (n * q,))
        return torch.cat([self.f_b_hat, f_w, self.f_sigma2[..., None]], dim=-1)


def mean_shift(f_w: torch.Tensor, w: torch.Tensor, mu_h: torch.Tensor, f_mu_h: torch.Tensor) -> torch.Tensor:
    """F_W μ_h + W F_μh；正反两个方向共用同一算式"""
    return (f_w @ mu_h[..., None])[..., 0] + (w @ f_mu_h[..., None])[..., 0]


def _diagonal_rate(f_sigma_h: torch.Tensor, mu_h: torch.Tensor) -> torch.Tensor:
    """dΣ_h/dt 的对角元；以矩阵 (..., q, q) 给出且非对角时报错"""
    f_sigma_h = as_tensor(f_sigma_h)
    q = mu_h.shape[-1]
    if f_sigma_h.dim() == mu_h.dim() + 1 and f_sigma_h.shape[-2:] == (q, q) \
            and f_sigma_h.shape[:-2] == mu_h.shape[:-1]:
        diagonal = torch.diagonal(f_sigma_h, dim1=-2, dim2=-1)
        if bool(torch.any(f_sigma_h != torch.diag_embed(diagonal))):
            raise DomainError("dΣ_h/dt 必须为对角矩阵")
        return diagonal
    return f_sigma_h


def observables_to_param_rhs(rates: TrackedRates, theta: Union[FullParams, GaussianParams]) -> ParamRates:
    """跟踪观测量的导数换算为完整参数导数

    Raises:
        DomainError: Σ_h 奇异或非对角
    """
    theta = gaussian_params(theta)
    d_mu_v, d_c_vh, d_tr_cv, d_mu_h, d_sigma_h = (as_tensor(r) for r in rates)
    d_sigma_h = _diagonal_rate(d_sigma_h, theta.mu_h)
    w, sigma_h = theta.w, theta.sigma_h
    f_w = (d_c_vh - w * d_sigma_h[..., None, :]) / sigma_h[..., None, :]
    f_b = d_mu_v - mean_shift(f_w, w, theta.mu_h, d_mu_h)
    n = w.shape[-2]
    trace_part = torch.sum(2.0 * f_w * sigma_h[..., None, :] * w + w * w * d_sigma_h[..., None, :], dim=(-2, -1))
    f_sigma2 = (d_tr_cv - trace_part) / n
    return ParamRates(f_b, f_w, f_sigma2, d_mu_h, d_sigma_h)


def to_standard_rhs(rates: ParamRates, theta: Union[FullParams, GaussianParams]) -> StandardRates:
    """F̂_b̂ = F_b + F_W μ_h + W F_μh，F̂_Ŵ = F_W Σ_h^{1/2} + ½ W Σ_h^{-1/2} F_Σh，σ² 分量不变

    Raises:
        DomainError: Σ_h 非对角或非正
    """
    theta = gaussian_params(theta)
    f_b, f_w, f_sigma2, f_mu_h, f_sigma_h = (as_tensor(r) for r in rates)
    f_sigma_h = _diagonal_rate(f_sigma_h, theta.mu_h)
    root = torch.sqrt(theta.sigma_h)
    f_b_hat = f_b + mean_shift(f_w, theta.w, theta.mu_h, f_mu_h)
    f_w_hat = f_w * root[..., None, :] + 0.5 * theta.w * (f_sigma_h / root)[..., None, :]
    return StandardRates(f_b_hat, f_w_hat, f_sigma2)


def standard_to_param_rhs(f_hat: torch.Tensor, theta: GaussianParams, f_mu_h: torch.Tensor,
                          f_sigma_h: torch.Tensor, q: int) -> ParamRates:
    """to_standard_rhs 的逆：已知隐变量的导数，由 dθ̂/dt 反解 F_b、F_W"""
    theta = gaussian_params(theta)
    f_b_hat, f_w_hat, f_sigma2 = split_standard_vector(as_tensor(f_hat), q)
    f_mu_h, f_sigma_h = as_tensor(f_mu_h), as_tensor(f_sigma_h)
    root = torch.sqrt(theta.sigma_h)
    f_w = (f_w_hat - 0.5 * theta.w * (f_sigma_h / root)[..., None, :]) / root[..., None, :]
    f_b = f_b_hat - mean_shift(f_w, theta.w, theta.mu_h, f_mu_h)
    return ParamRates(f_b, f_w, f_sigma2, f_mu_h, f_sigma_h)
