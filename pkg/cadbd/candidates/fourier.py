#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
隐变量参数的傅里叶级数

    s(a, b; t) = Σ_l (a_l cos f_l t + b_l sin f_l t) / (max(Σ_l |a_l| + |b_l|, 1) + ε)
    μ_h,i = s(a^μ_i, b^μ_i),  Σ_h,ii = 1 + ε + s(a^Σ_i, b^Σ_i)

因此 |μ_h| ≤ 1，Σ_h ∈ [ε, 2 + ε]。
"""
import math
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
import torch
from torch import nn

from ..errors import DomainError

LATENT_EPSILON = 1e-8


def default_frequencies(n: int = 6, period: float = 40.0) -> np.ndarray:
    """f_l = l·2π/period, l = 1..n"""
    return np.arange(1, n + 1) * 2.0 * math.pi / period


class LatentFourier(nn.Module):
    """μ_h(t)、Σ_h(t) 的傅里叶参数化，系数可与网络一同训练

    Args:
        q: 隐变量数
        frequencies: 角频率 (rad/s)，默认 l·2π/40, l=1..6
        epsilon: 分母与方差下限中的小常数
    """

    def __init__(self, q: int, frequencies: Optional[Sequence[float]] = None, epsilon: float = LATENT_EPSILON):
        super().__init__()
        freqs = default_frequencies() if frequencies is None else np.asarray(frequencies, dtype=float)
        if q < 1 or freqs.ndim != 1 or len(freqs) < 1:
            raise DomainError(f"隐变量数与频率数必须 >= 1: q={q}, L={len(np.atleast_1d(freqs))}")
        self.q = int(q)
        self.epsilon = float(epsilon)
        self.register_buffer("frequencies", torch.as_tensor(freqs, dtype=torch.float64))
        shape = (self.q, len(freqs))
        self.a_mu = nn.Parameter(torch.zeros(shape, dtype=torch.float64))
        self.b_mu = nn.Parameter(torch.zeros(shape, dtype=torch.float64))
        self.a_sigma = nn.Parameter(torch.zeros(shape, dtype=torch.float64))
        self.b_sigma = nn.Parameter(torch.zeros(shape, dtype=torch.float64))

    @property
    def n_frequencies(self) -> int:
        return self.frequencies.shape[0]

    @classmethod
    def bootstrap(cls, q: int, frequencies: Optional[Sequence[float]] = None,
                  epsilon: float = LATENT_EPSILON) -> "LatentFourier":
        """只保留最高频率且 a = b = 1，用于估计候选输入的标准化"""
        lf = cls(q, frequencies, epsilon)
        top = int(torch.argmax(lf.frequencies))
        with torch.no_grad():
            for coeff in (lf.a_mu, lf.b_mu, lf.a_sigma, lf.b_sigma):
                coeff[:, top] = 1.0
        return lf

    def _norm(self, a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
        return torch.clamp(torch.sum(torch.abs(a) + torch.abs(b), dim=-1), min=1.0) + self.epsilon

    def _phase(self, t) -> torch.Tensor:
        t = torch.as_tensor(t, dtype=torch.float64)
        return t[..., None, None] * self.frequencies

    def _series(self, a: torch.Tensor, b: torch.Tensor, phase: torch.Tensor) -> torch.Tensor:
        return torch.sum(a * torch.cos(phase) + b * torch.sin(phase), dim=-1) / self._norm(a, b)

    def forward(self, t) -> Tuple[torch.Tensor, torch.Tensor]:
        """返回 (μ_h, Σ_h 对角元)，形状均为 t.shape + (q,)"""
        phase = self._phase(t)
        mu_h = self._series(self.a_mu, self.b_mu, phase)
        sigma_h = 1.0 + self.epsilon + self._series(self.a_sigma, self.b_sigma, phase)
        return mu_h, sigma_h

    def derivative(self, t) -> Tuple[torch.Tensor, torch.Tensor]:
        """解析时间导数 (dμ_h/dt, dΣ_h/dt)"""
        phase = self._phase(t)
        f = self.frequencies

        def rate(a, b):
            return torch.sum(f * (b * torch.cos(phase) - a * torch.sin(phase)), dim=-1) / self._norm(a, b)

        return rate(self.a_mu, self.b_mu), rate(self.a_sigma, self.b_sigma)

    def coefficients(self) -> Dict[str, torch.Tensor]:
        return {"a_mu": self.a_mu, "b_mu": self.b_mu, "a_sigma": self.a_sigma, "b_sigma": self.b_sigma}

    def to_dict(self) -> Dict[str, Any]:
        data = {name: value.detach().tolist() for name, value in self.coefficients().items()}
        data.update(q=self.q, frequencies=self.frequencies.tolist(), epsilon=self.epsilon)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LatentFourier":
        lf = cls(int(data["q"]), data["frequencies"], float(data.get("epsilon", LATENT_EPSILON)))
        with torch.no_grad():
            for name, value in lf.coefficients().items():
                loaded = torch.as_tensor(data[name], dtype=torch.float64)
                if loaded.shape != value.shape:
                    raise DomainError(f"傅里叶系数 {name} 形状不符: {tuple(loaded.shape)} != {tuple(value.shape)}")
                value.copy_(loaded)
        return lf


def fourier_latent(t, lf: LatentFourier) -> Tuple[torch.Tensor, torch.Tensor]:
    """μ_h(t) 与 Σ_h(t) 对角元"""
    return lf(t)
