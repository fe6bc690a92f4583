#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
矩方程与高斯闭合

速率为 1 的单条反应下，原始矩满足
    d⟨n_i⟩/dt      = ν_i ⟨a⟩
    d⟨n_i n_j⟩/dt  = ν_i ⟨a n_j⟩ + ν_j ⟨a n_i⟩ + ν_i ν_j ⟨a⟩
二阶倾向函数产生的三阶矩用高斯闭合表示为一、二阶矩。
所有函数在 float64 torch 张量上批量计算，前导维度任意。
"""
from typing import NamedTuple, Union

import torch

from ..errors import DomainError
from ..reduction.pca import FullParams, MomentState, latent_diagonal, split_standard_vector
from .motif import ReactionMotif


def as_tensor(value) -> torch.Tensor:
    return torch.as_tensor(value, dtype=torch.float64)


class GaussianParams(NamedTuple):
    """完整参数 θ 的张量形式，sigma_h 为 Σ_h 对角元"""
    b: torch.Tensor
    w: torch.Tensor
    sigma2: torch.Tensor
    mu_h: torch.Tensor
    sigma_h: torch.Tensor


class Moments(NamedTuple):
    """φ = {μ, C}，前 n_visible 个分量为可见物种"""
    mu: torch.Tensor
    cov: torch.Tensor
    n_visible: int


class TrackedRates(NamedTuple):
    """跟踪的观测量导数 d{μ_v, C_vh, Tr(C_v), μ_h, diag Σ_h}/dt"""
    d_mu_v: torch.Tensor
    d_c_vh: torch.Tensor
    d_tr_cv: torch.Tensor
    d_mu_h: torch.Tensor
    d_sigma_h: torch.Tensor


def gaussian_params(theta: Union[FullParams, GaussianParams]) -> GaussianParams:
    """统一为张量形式；Σ_h 非对角或非正时报错"""
    if isinstance(theta, FullParams):
        sigma_h = latent_diagonal(theta.sigma_h)
        return GaussianParams(as_tensor(theta.b), as_tensor(theta.w), as_tensor(theta.sigma2),
                              as_tensor(theta.mu_h), as_tensor(sigma_h))
    theta = GaussianParams(*(as_tensor(v) for v in theta))
    if theta.sigma_h.shape != theta.mu_h.shape:
        raise DomainError(f"Σ_h 必须以对角元给出: {tuple(theta.sigma_h.shape)}")
    if bool(torch.any(theta.sigma_h <= 0)):
        raise DomainError("Σ_h 奇异：对角元必须为正")
    return theta


def standard_to_gaussian(theta_hat, mu_h, sigma_h, q: int) -> GaussianParams:
    """θ̂ 向量 (..., D̂) → θ：W = ŴΣ_h^{-1/2}，b = b̂ − Wμ_h"""
    b_hat, w_hat, sigma2 = split_standard_vector(as_tensor(theta_hat), q)
    mu_h = as_tensor(mu_h)
    sigma_h = as_tensor(sigma_h)
    if bool(torch.any(sigma_h <= 0)):
        raise DomainError("Σ_h 对角元必须为正")
    w = w_hat / torch.sqrt(sigma_h)[..., None, :]
    b = b_hat - (w @ mu_h[..., None])[..., 0]
    return GaussianParams(b, w, sigma2, mu_h, sigma_h)


def broadcast_params(theta: GaussianParams) -> GaussianParams:
    """把各分量扩展到共同的批维度"""
    batch = torch.broadcast_shapes(theta.b.shape[:-1], theta.w.shape[:-2], theta.sigma2.shape,
                                   theta.mu_h.shape[:-1], theta.sigma_h.shape[:-1])
    n, q = theta.w.shape[-2:]
    return GaussianParams(theta.b.expand(batch + (n,)), theta.w.expand(batch + (n, q)),
                          theta.sigma2.expand(batch), theta.mu_h.expand(batch + (q,)),
                          theta.sigma_h.expand(batch + (q,)))


def gaussian_moments(theta: GaussianParams) -> Moments:
    """μ = (b + Wμ_h; μ_h)，C = [[WΣ_hWᵀ + σ²I, WΣ_h], [Σ_hWᵀ, Σ_h]]"""
    theta = broadcast_params(theta)
    n = theta.w.shape[-2]
    c_vh = theta.w * theta.sigma_h[..., None, :]
    c_v = c_vh @ theta.w.transpose(-1, -2) + theta.sigma2[..., None, None] * torch.eye(n, dtype=torch.float64)
    top = torch.cat([c_v, c_vh], dim=-1)
    bottom = torch.cat([c_vh.transpose(-1, -2), torch.diag_embed(theta.sigma_h)], dim=-1)
    mu_v = theta.b + (theta.w @ theta.mu_h[..., None])[..., 0]
    return Moments(torch.cat([mu_v, theta.mu_h], dim=-1), torch.cat([top, bottom], dim=-2), n)


def moment_tensors(phi: Union[MomentState, Moments]) -> Moments:
    """MomentState（numpy）或 Moments 统一为张量形式"""
    return Moments(as_tensor(phi.mu), as_tensor(phi.cov), int(phi.n_visible))


def gaussian_closure_third_moment(mu_x, mu_y, mu_z, m2_xy, m2_xz, m2_yz):
    """⟨n_x n_y n_z⟩ ≈ −2μ_xμ_yμ_z + μ_x⟨n_y n_z⟩ + μ_y⟨n_x n_z⟩ + μ_z⟨n_x n_y⟩

    二阶矩为原始矩 ⟨n n⟩ = C + μμᵀ。标量、numpy 与 torch 通用。
    """
    return -2.0 * mu_x * mu_y * mu_z + mu_x * m2_yz + mu_y * m2_xz + mu_z * m2_xy


def _stoichiometry_vector(motif: ReactionMotif, n_species: int) -> torch.Tensor:
    nu = torch.zeros(n_species, dtype=torch.float64)
    for index, change in motif.stoichiometry().items():
        nu[index] = float(change)
    return nu


def closed_moment_rhs(motif: ReactionMotif, phi: Union[MomentState, Moments]) -> TrackedRates:
    """单个基元（速率 1）下的闭合矩导数，只返回跟踪的子集

    Raises:
        DomainError: 基元角色下标超出物种数
    """
    mu, cov, n = moment_tensors(phi)
    n_species = mu.shape[-1]
    motif.validate(n_species)
    m2 = cov + mu[..., :, None] * mu[..., None, :]
    index = motif.propensity_indices()
    if len(index) == 1:
        x = index[0]
        mean_a = mu[..., x]
        a_times_n = m2[..., x, :]
    else:
        x, y = index
        mean_a = m2[..., x, y]
        a_times_n = gaussian_closure_third_moment(mu[..., x, None], mu[..., y, None], mu,
                                                  m2[..., x, y, None], m2[..., x, :], m2[..., y, :])
    nu = _stoichiometry_vector(motif, n_species)
    d_mu = mean_a[..., None] * nu
    d_m2 = (nu[:, None] * a_times_n[..., None, :] + a_times_n[..., :, None] * nu[None, :]
            + mean_a[..., None, None] * (nu[:, None] * nu[None, :]))
    d_cov = d_m2 - d_mu[..., :, None] * mu[..., None, :] - mu[..., :, None] * d_mu[..., None, :]
    return tracked_from_moments(d_mu, d_cov, n)


def tracked_from_moments(d_mu, d_cov, n_visible: int) -> TrackedRates:
    """由完整的 dμ、dC 取出跟踪子集（Σ_h 只取对角）"""
    d_mu, d_cov = as_tensor(d_mu), as_tensor(d_cov)
    n = n_visible
    return TrackedRates(
        d_mu_v=d_mu[..., :n],
        d_c_vh=d_cov[..., :n, n:],
        d_tr_cv=torch.diagonal(d_cov[..., :n, :n], dim1=-2, dim2=-1).sum(-1),
        d_mu_h=d_mu[..., n:],
        d_sigma_h=torch.diagonal(d_cov[..., n:, n:], dim1=-2, dim2=-1),
    )
