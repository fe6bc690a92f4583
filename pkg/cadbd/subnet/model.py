#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
子网络 F̂(·; u)

全连接 ReLU 网络，隐藏层使用反向缩放的 dropout。输入为标准化后的候选向量
（ReactionCandidates）或标准化后的 θ̂（ParametersOnly），输出在标准化的
目标空间中计算后还原为 dθ̂/dt。隐变量的傅里叶系数与网络权重一同训练。
"""
import logging
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
from torch import nn

from ..candidates.fourier import LatentFourier, default_frequencies
from ..candidates.library import STD_FLOOR, candidate_vector
from ..candidates.motif import ReactionMotif
from ..errors import DomainError
from ..reduction.pca import standard_dim

logger = logging.getLogger("subnet")


class InputMode(str, Enum):
    """子网络输入模式"""
    CANDIDATES = "ReactionCandidates"
    PARAMETERS = "ParametersOnly"


@dataclass(frozen=True)
class SubnetSpec:
    """子网络结构

    Args:
        n_visible: 可见物种数 N_v
        latent_dim: 隐变量数 q
        widths: 隐藏层宽度
        dropout_rate: 隐藏层 dropout 概率
        weight_cutoff: 权重裁剪阈值
        input_mode: 输入模式
        n_motifs: 候选基元数（ParametersOnly 模式下为 0）
        frequencies: 隐变量傅里叶频率
    """
    n_visible: int
    latent_dim: int
    widths: Tuple[int, ...] = (25,)
    dropout_rate: float = 0.1
    weight_cutoff: float = 1.0
    input_mode: InputMode = InputMode.CANDIDATES
    n_motifs: int = 0
    frequencies: Tuple[float, ...] = field(default_factory=lambda: tuple(default_frequencies().tolist()))

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        object.__setattr__(self, "input_mode", InputMode(self.input_mode))
        object.__setattr__(self, "frequencies", tuple(float(f) for f in self.frequencies))
        if not self.widths or any(w < 1 for w in self.widths):
            raise DomainError(f"至少需要一个正宽度的隐藏层: {self.widths}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise DomainError(f"dropout 概率必须在 [0, 1) 内: {self.dropout_rate}")
        if not self.weight_cutoff > 0 or not math.isfinite(self.weight_cutoff):
            raise DomainError(f"权重裁剪阈值必须为正: {self.weight_cutoff}")
        if self.n_visible < 2 or not 1 <= self.latent_dim < self.n_visible:
            raise DomainError(f"需要 1 <= q < N_v: N_v={self.n_visible}, q={self.latent_dim}")
        if self.input_mode == InputMode.CANDIDATES and self.n_motifs < 1:
            raise DomainError("ReactionCandidates 模式至少需要一个基元")

    @property
    def output_dim(self) -> int:
        return standard_dim(self.n_visible, self.latent_dim)

    @property
    def input_dim(self) -> int:
        if self.input_mode == InputMode.CANDIDATES:
            return self.n_motifs * self.output_dim
        return self.output_dim

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["widths"] = list(self.widths)
        data["frequencies"] = list(self.frequencies)
        data["input_mode"] = self.input_mode.value
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SubnetSpec":
        return cls(**data)


class SubnetModel(nn.Module):
    """dθ̂/dt 的神经网络模型

    Args:
        spec: 网络结构
        motifs: 候选基元（ParametersOnly 模式下可为空）
        seed: 初始化种子
    """

    def __init__(self, spec: SubnetSpec, motifs: Sequence[ReactionMotif] = (), seed: int = 0):
        super().__init__()
        if spec.input_mode == InputMode.CANDIDATES and len(motifs) != spec.n_motifs:
            raise DomainError(f"基元数 {len(motifs)} 与结构中的 n_motifs={spec.n_motifs} 不一致")
        self.spec = spec
        self.motifs: List[ReactionMotif] = list(motifs)
        dims = [spec.input_dim] + list(spec.widths) + [spec.output_dim]
        self.layers = nn.ModuleList(nn.Linear(a, b, dtype=torch.float64) for a, b in zip(dims[:-1], dims[1:]))
        self.lf = LatentFourier(spec.latent_dim, spec.frequencies)
        self.register_buffer("input_mean", torch.zeros(spec.input_dim, dtype=torch.float64))
        self.register_buffer("input_std", torch.ones(spec.input_dim, dtype=torch.float64))
        self.register_buffer("target_mean", torch.zeros(spec.output_dim, dtype=torch.float64))
        self.register_buffer("target_std", torch.ones(spec.output_dim, dtype=torch.float64))
        self.reset_parameters(seed)

    def reset_parameters(self, seed: int) -> None:
        """He 均匀初始化，偏置与傅里叶系数置零"""
        generator = torch.Generator().manual_seed(int(seed))
        with torch.no_grad():
            for layer in self.layers:
                bound = math.sqrt(6.0 / layer.in_features)
                layer.weight.uniform_(-bound, bound, generator=generator)
                layer.bias.zero_()
            for coeff in self.lf.coefficients().values():
                coeff.zero_()
        self.clip_weights()

    def clip_weights(self) -> None:
        """把每层的权重与偏置裁剪到 [−cutoff, cutoff]"""
        cutoff = self.spec.weight_cutoff
        with torch.no_grad():
            for layer in self.layers:
                layer.weight.clamp_(-cutoff, cutoff)
                layer.bias.clamp_(-cutoff, cutoff)

    def max_weight(self) -> float:
        return max(float(torch.max(torch.abs(p))) for layer in self.layers for p in (layer.weight, layer.bias))

    def set_standardization(self, input_mean, input_std, target_mean, target_std) -> None:
        """设置输入与目标的标准化参数；标准差下限 1e-12"""
        values = [np.asarray(v, dtype=float) for v in (input_mean, input_std, target_mean, target_std)]
        expected = [self.spec.input_dim] * 2 + [self.spec.output_dim] * 2
        for value, size in zip(values, expected):
            if value.shape != (size,):
                raise DomainError(f"标准化参数长度 {value.shape} 与期望的 {size} 不一致")
        with torch.no_grad():
            self.input_mean.copy_(torch.as_tensor(values[0]))
            self.input_std.copy_(torch.as_tensor(np.maximum(values[1], STD_FLOOR)))
            self.target_mean.copy_(torch.as_tensor(values[2]))
            self.target_std.copy_(torch.as_tensor(np.maximum(values[3], STD_FLOOR)))

    def raw_inputs(self, theta_hat: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        """未标准化的网络输入"""
        if self.spec.input_mode == InputMode.CANDIDATES:
            return candidate_vector(theta_hat, t, self.lf, self.motifs)
        return theta_hat

    def standardized_forward(self, theta_hat, t, train_mode: bool = False,
                             generator: Optional[torch.Generator] = None) -> torch.Tensor:
        """标准化目标空间中的输出"""
        theta_hat = torch.as_tensor(theta_hat, dtype=torch.float64)
        if theta_hat.shape[-1] != self.spec.output_dim:
            raise DomainError(f"θ̂ 维度 {theta_hat.shape[-1]} 与网络的 D̂={self.spec.output_dim} 不一致")
        t = torch.as_tensor(t, dtype=torch.float64)
        x = (self.raw_inputs(theta_hat, t) - self.input_mean) / self.input_std
        rate = self.spec.dropout_rate
        for layer in self.layers[:-1]:
            x = torch.relu(layer(x))
            if train_mode and rate > 0:
                mask = torch.bernoulli(torch.full_like(x, 1.0 - rate), generator=generator)
                x = x * mask / (1.0 - rate)
        return self.layers[-1](x)

    def forward(self, theta_hat, t, train_mode: bool = False,
                generator: Optional[torch.Generator] = None) -> torch.Tensor:
        """dθ̂/dt 预测

        Args:
            theta_hat: 标准参数 (..., D̂)
            t: 时间，可广播到批维度
            train_mode: 是否启用 dropout
            generator: dropout 掩码的随机数生成器

        Raises:
            DomainError: 维度与网络结构不一致
        """
        return self.standardized_forward(theta_hat, t, train_mode, generator) * self.target_std + self.target_mean

    def loss(self, theta_hat, t, targets, train_mode: bool = True,
             generator: Optional[torch.Generator] = None) -> torch.Tensor:
        """标准化目标与标准化输出之间的均方误差"""
        targets = torch.as_tensor(targets, dtype=torch.float64)
        if targets.shape[0] == 0:
            raise DomainError("批次为空")
        scaled = (targets - self.target_mean) / self.target_std
        return torch.mean((self.standardized_forward(theta_hat, t, train_mode, generator) - scaled) ** 2)

    def predict(self, theta_hat, t) -> np.ndarray:
        """推理模式下的 numpy 预测"""
        with torch.no_grad():
            return self.forward(theta_hat, t, train_mode=False).numpy()
