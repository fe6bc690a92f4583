#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
模型检查点

JSON 文档：{version, gradient, spec, weights, lf, standardization, motifs, species, conserved}。
浮点数按 repr 写出，读回后前向输出逐位一致。
"""
import json
import logging
import os
from typing import Any, Dict, Optional, Sequence

import torch

from ..candidates.fourier import LatentFourier
from ..candidates.motif import motifs_from_dict, motifs_to_dict
from ..errors import CheckpointError, DomainError
from .model import SubnetModel, SubnetSpec

logger = logging.getLogger("subnet")

CHECKPOINT_VERSION = 1
GRADIENT_METHOD = "autograd"


def checkpoint_to_dict(model: SubnetModel, species: Sequence[str], conserved: Optional[str] = None,
                       extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """模型序列化为字典

    Args:
        model: 模型
        species: 基元角色所引用的物种（可见在前，隐物种在后）
        conserved: 守恒物种名
        extra: 附加的元数据（如训练历史）
    """
    data = {
        "version": CHECKPOINT_VERSION,
        "gradient": GRADIENT_METHOD,
        "spec": model.spec.to_dict(),
        "weights": [{"weight": layer.weight.detach().tolist(), "bias": layer.bias.detach().tolist()}
                    for layer in model.layers],
        "lf": model.lf.to_dict(),
        "standardization": {
            "input_mean": model.input_mean.tolist(),
            "input_std": model.input_std.tolist(),
            "target_mean": model.target_mean.tolist(),
            "target_std": model.target_std.tolist(),
        },
        "motifs": motifs_to_dict(model.motifs),
        "species": list(species),
        "conserved": conserved,
    }
    if extra:
        data["extra"] = extra
    return data


def checkpoint_from_dict(data: Dict[str, Any]) -> SubnetModel:
    """由字典重建模型

    Raises:
        CheckpointError: 版本不匹配或内容损坏
    """
    if not isinstance(data, dict):
        raise CheckpointError("检查点内容不是 JSON 对象")
    version = data.get("version")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"检查点版本 {version} 与当前版本 {CHECKPOINT_VERSION} 不匹配")
    try:
        spec = SubnetSpec.from_dict(data["spec"])
        motifs = motifs_from_dict(data["motifs"], data["species"], data.get("conserved"))
        model = SubnetModel(spec, motifs)
        if len(data["weights"]) != len(model.layers):
            raise CheckpointError(f"层数 {len(data['weights'])} 与结构不一致")
        with torch.no_grad():
            for layer, saved in zip(model.layers, data["weights"]):
                weight = torch.as_tensor(saved["weight"], dtype=torch.float64)
                bias = torch.as_tensor(saved["bias"], dtype=torch.float64)
                if weight.shape != layer.weight.shape or bias.shape != layer.bias.shape:
                    raise CheckpointError(f"权重形状 {tuple(weight.shape)} 与结构 {tuple(layer.weight.shape)} 不一致")
                layer.weight.copy_(weight)
                layer.bias.copy_(bias)
            model.lf.load_state_dict(LatentFourier.from_dict(data["lf"]).state_dict())
        std = data["standardization"]
        model.set_standardization(std["input_mean"], std["input_std"], std["target_mean"], std["target_std"])
    except CheckpointError:
        raise
    except (KeyError, TypeError, ValueError, DomainError) as e:
        raise CheckpointError(f"检查点内容损坏: {e}") from e
    return model


def save_checkpoint(model: SubnetModel, path: str, species: Sequence[str], conserved: Optional[str] = None,
                    extra: Optional[Dict[str, Any]] = None) -> str:
    """写入检查点文件"""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(checkpoint_to_dict(model, species, conserved, extra), fh, indent=1, sort_keys=True)
    logger.info(f"检查点已写入 {path}")
    return path


def load_checkpoint(path: str) -> SubnetModel:
    """读取检查点文件

    Raises:
        CheckpointError: 文件不存在、不是合法 JSON、版本不匹配或内容损坏
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise CheckpointError(f"无法读取检查点 {path}: {e}") from e
    model = checkpoint_from_dict(data)
    model.eval()
    return model
