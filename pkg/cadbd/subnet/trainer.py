#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
子网络训练

各训练条件的训练对合并后，以 Adam 在标准化 L2 损失上优化网络权重与
隐变量傅里叶系数；每一步之后裁剪权重。给定种子时结果逐位可复现。
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch

from ..candidates.fourier import LatentFourier
from ..candidates.library import STD_FLOOR, fit_candidate_standardization
from ..candidates.motif import ReactionMotif
from ..errors import DomainError, TrainingFault
from ..reduction.pca import ParameterSeries
from ..reduction.tvr import TrainingPairs
from .model import InputMode, SubnetModel, SubnetSpec

logger = logging.getLogger("trainer")


@dataclass(frozen=True)
class TrainingConfig:
    """Adam 超参数与训练轮数"""
    rounds: int = 200
    batch_size: int = 64
    learning_rate: float = 1e-3
    seed: int = 0
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8

    def __post_init__(self):
        if self.rounds < 0 or self.batch_size < 1 or self.learning_rate <= 0:
            raise DomainError(f"非法的训练配置: rounds={self.rounds}, batch={self.batch_size}, lr={self.learning_rate}")


@dataclass
class TrainingHistory:
    """每轮的平均训练损失与验证损失"""
    train_loss: List[float] = field(default_factory=list)
    validation_loss: List[float] = field(default_factory=list)
    steps: int = 0

    def to_dict(self):
        return {"train_loss": self.train_loss, "validation_loss": self.validation_loss, "steps": self.steps}


@dataclass
class PooledPairs:
    """合并后的训练样本"""
    theta: torch.Tensor
    times: torch.Tensor
    targets: torch.Tensor
    series: List[ParameterSeries]

    def __len__(self) -> int:
        return self.theta.shape[0]


def pool_pairs(pairs: Sequence[TrainingPairs], interior: bool = True) -> PooledPairs:
    """合并多个条件的训练对；默认去掉每个条件首尾两个导数样本"""
    if not pairs:
        raise DomainError("没有训练对")
    used = [p.interior() if interior else p for p in pairs]
    if any(len(p) == 0 for p in used):
        raise DomainError("训练对在去掉首尾样本后为空")
    dims = {p.inputs.shape[1] for p in used}
    if len(dims) != 1:
        raise DomainError(f"各条件的参数维度不一致: {sorted(dims)}")
    return PooledPairs(
        theta=torch.as_tensor(np.concatenate([p.inputs for p in used]), dtype=torch.float64),
        times=torch.as_tensor(np.concatenate([p.times for p in used]), dtype=torch.float64),
        targets=torch.as_tensor(np.concatenate([p.targets for p in used]), dtype=torch.float64),
        series=[ParameterSeries(p.times, p.inputs, p.q, label=p.label) for p in used],
    )


class SubnetTrainer:
    """子网络训练器

    Args:
        model: 待训练的模型
        config: 训练配置
    """

    def __init__(self, model: SubnetModel, config: TrainingConfig):
        self.model = model
        self.config = config
        self.history = TrainingHistory()

    def fit_standardization(self, data: PooledPairs) -> None:
        """目标取总体均值/标准差；候选输入用自举隐变量设置估计"""
        targets = data.targets.numpy()
        target_mean, target_std = targets.mean(axis=0), np.maximum(targets.std(axis=0), STD_FLOOR)
        spec = self.model.spec
        if spec.input_mode == InputMode.CANDIDATES:
            bootstrap = LatentFourier.bootstrap(spec.latent_dim, spec.frequencies, self.model.lf.epsilon)
            standardization = fit_candidate_standardization(data.series, bootstrap, self.model.motifs)
            input_mean, input_std = standardization.mean, standardization.std
        else:
            theta = data.theta.numpy()
            input_mean, input_std = theta.mean(axis=0), np.maximum(theta.std(axis=0), STD_FLOOR)
        self.model.set_standardization(input_mean, input_std, target_mean, target_std)

    def evaluate(self, data: PooledPairs) -> float:
        """推理模式下的损失"""
        with torch.no_grad():
            return float(self.model.loss(data.theta, data.times, data.targets, train_mode=False))

    def train(self, pairs: Sequence[TrainingPairs], validation: Optional[Sequence[TrainingPairs]] = None) -> SubnetModel:
        """训练模型

        Args:
            pairs: 各训练条件的训练对（合并使用）
            validation: 可选的验证条件训练对，仅用于记录损失

        Returns:
            训练后的模型

        Raises:
            TrainingFault: 损失出现非有限值，携带步数
        """
        data = pool_pairs(pairs)
        held_out = pool_pairs(validation) if validation else None
        self.fit_standardization(data)
        cfg = self.config
        generator = torch.Generator().manual_seed(int(cfg.seed))
        optimizer = torch.optim.Adam(self.model.parameters(), lr=cfg.learning_rate, betas=cfg.betas, eps=cfg.eps)
        n = len(data)
        logger.info(f"开始训练: 样本数 {n}, 轮数 {cfg.rounds}, 模式 {self.model.spec.input_mode.value}, 种子 {cfg.seed}")
        for round_index in range(cfg.rounds):
            order = torch.randperm(n, generator=generator)
            total, batches = 0.0, 0
            for start in range(0, n, cfg.batch_size):
                index = order[start:start + cfg.batch_size]
                optimizer.zero_grad()
                loss = self.model.loss(data.theta[index], data.times[index], data.targets[index],
                                       train_mode=True, generator=generator)
                if not torch.isfinite(loss):
                    logger.error(f"第 {self.history.steps} 步损失为非有限值")
                    raise TrainingFault(self.history.steps)
                loss.backward()
                optimizer.step()
                self.model.clip_weights()
                self.history.steps += 1
                total += float(loss.detach())
                batches += 1
            self.history.train_loss.append(total / batches)
            if held_out is not None:
                self.history.validation_loss.append(self.evaluate(held_out))
            logger.debug(f"第 {round_index + 1} 轮: 训练损失 {self.history.train_loss[-1]:.6g}")
        logger.info(f"训练完成: 共 {self.history.steps} 步")
        return self.model


def train_subnet(pairs: Sequence[TrainingPairs], spec: SubnetSpec, motifs: Sequence[ReactionMotif],
                 config: TrainingConfig,
                 validation: Optional[Sequence[TrainingPairs]] = None) -> Tuple[SubnetModel, TrainingHistory]:
    """以 config.seed 初始化并训练一个模型"""
    model = SubnetModel(spec, motifs if spec.input_mode == InputMode.CANDIDATES else (), seed=config.seed)
    trainer = SubnetTrainer(model, config)
    trainer.train(pairs, validation)
    return model, trainer.history
