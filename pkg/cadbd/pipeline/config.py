#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
流水线配置

一个 YAML 文档驱动全部阶段。dyk 段使用参数表的键名，其余各段见下方数据类；
未知的段或键、缺少无默认值的键都会抛出携带键名的 ConfigError。
"""
import hashlib
import logging
from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, List, Optional, Tuple, Type, TypeVar, Union

import yaml

from ..errors import ConfigError, DomainError
from ..model.dyk_params import DykParams

logger = logging.getLogger("pipeline")

AXES = ("ip3", "n_ip3r")


@dataclass(frozen=True)
class ConditionsConfig:
    """条件轴与各组取值；n_ip3r 轴下 [IP3] 固定为 ip3"""
    training: Tuple[float, ...]
    validation: Tuple[float, ...] = ()
    boundary: Tuple[float, ...] = ()
    axis: str = "ip3"
    ip3: Optional[float] = None

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError("conditions.axis", f"条件轴必须是 {AXES} 之一: {self.axis}")
        for name in ("training", "validation", "boundary"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if not self.training:
            raise ConfigError("conditions.training", "至少需要一个训练条件")

    def all_values(self) -> List[float]:
        """全部条件（去重，保持声明顺序）"""
        seen: List[float] = []
        for value in self.training + self.validation + self.boundary:
            if value not in seen:
                seen.append(value)
        return seen

    def transform_values(self) -> List[float]:
        """拟合标准化变换所用的条件；未声明边界时使用全部训练条件"""
        return list(self.boundary) if self.boundary else list(self.training)


@dataclass(frozen=True)
class EnsembleConfig:
    trajectories: int = 20
    base_seed: int = 1

    def __post_init__(self):
        if self.trajectories < 2:
            raise ConfigError("ensemble.trajectories", f"每个条件至少需要 2 条轨迹: {self.trajectories}")


@dataclass(frozen=True)
class ReductionConfig:
    """降阶模型：可见物种、隐变量数、估计窗口与方差下限"""
    visible: Tuple[str, ...] = ("Ca_Cyt", "IP3")
    latent_dim: int = 1
    window: Tuple[float, float] = (10.0, 50.0)
    variance_floor: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "visible", tuple(self.visible))
        if len(self.window) != 2 or self.window[0] >= self.window[1]:
            raise ConfigError("reduction.window", f"窗口必须为 [t0, t1] 且 t0 < t1: {self.window}")
        object.__setattr__(self, "window", (float(self.window[0]), float(self.window[1])))
        if not 1 <= self.latent_dim < len(self.visible):
            raise ConfigError("reduction.latent_dim", f"需要 1 <= q < N_v: q={self.latent_dim}, N_v={len(self.visible)}")


@dataclass(frozen=True)
class TvrSection:
    alpha: float = 100.0
    iterations: int = 10
    small_threshold: float = 1e-5


@dataclass(frozen=True)
class CandidatesConfig:
    """motifs 为 "lotka_volterra" 或 [{kind, roles}] 列表；conserved 为守恒物种"""
    motifs: Union[str, List[Dict[str, Any]]] = "lotka_volterra"
    conserved: Optional[str] = None
    frequencies: Optional[Tuple[float, ...]] = None


@dataclass(frozen=True)
class SubnetSection:
    widths: Tuple[int, ...] = (25,)
    dropout_rate: float = 0.1
    weight_cutoff: float = 1.0


@dataclass(frozen=True)
class TrainingSection:
    rounds: int = 200
    batch_size: int = 64
    learning_rate: float = 1e-3
    seeds: Tuple[int, ...] = (0,)
    modes: Tuple[str, ...] = ("ReactionCandidates", "ParametersOnly")

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "modes", tuple(self.modes))
        if not self.seeds:
            raise ConfigError("training.seeds", "至少需要一个优化种子")
        for mode in self.modes:
            if mode not in ("ReactionCandidates", "ParametersOnly"):
                raise ConfigError("training.modes", f"未知的输入模式: {mode}")


@dataclass(frozen=True)
class RolloutSection:
    """dt 默认取 dyk.dt_write"""
    dt: Optional[float] = None


@dataclass(frozen=True)
class AnalysisSection:
    species: str = "Ca_Cyt"
    window: float = 40.0
    bootstrap: int = 1000
    deterministic: bool = True
    deterministic_horizon: float = 200.0
    term_species: Optional[str] = None


SECTIONS = {
    "conditions": ConditionsConfig,
    "ensemble": EnsembleConfig,
    "reduction": ReductionConfig,
    "tvr": TvrSection,
    "candidates": CandidatesConfig,
    "subnet": SubnetSection,
    "training": TrainingSection,
    "rollout": RolloutSection,
    "analysis": AnalysisSection,
}

S = TypeVar("S")


def _build_section(name: str, cls: Type[S], data: Optional[Dict[str, Any]]) -> S:
    """用一个配置段构造数据类；未知键与类型错误都转为 ConfigError"""
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError(name, f"配置段必须是映射: {name}")
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"{name}.{key}", f"未知的配置项: {name}.{key}")
    try:
        return cls(**data)
    except ConfigError:
        raise
    except TypeError as e:
        missing = [f.name for f in fields(cls) if f.name not in data]
        key = f"{name}.{missing[0]}" if missing else name
        raise ConfigError(key, f"配置段 {name} 不完整: {e}") from e
    except (ValueError, DomainError) as e:
        raise ConfigError(name, f"配置段 {name} 非法: {e}") from e


@dataclass(frozen=True)
class PipelineConfig:
    """完整的流水线配置"""
    dyk: DykParams
    conditions: ConditionsConfig
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    reduction: ReductionConfig = field(default_factory=ReductionConfig)
    tvr: TvrSection = field(default_factory=TvrSection)
    candidates: CandidatesConfig = field(default_factory=CandidatesConfig)
    subnet: SubnetSection = field(default_factory=SubnetSection)
    training: TrainingSection = field(default_factory=TrainingSection)
    rollout: RolloutSection = field(default_factory=RolloutSection)
    analysis: AnalysisSection = field(default_factory=AnalysisSection)
    config_hash: str = ""
    path: Optional[str] = None

    @property
    def rollout_dt(self) -> float:
        return self.rollout.dt if self.rollout.dt is not None else self.dyk.dt_write

    def params_for(self, value: float) -> Tuple[DykParams, float]:
        """条件值 → (模型参数, [IP3] 均值)"""
        if self.conditions.axis == "n_ip3r":
            ip3 = self.conditions.ip3 if self.conditions.ip3 is not None else self.dyk.mu0_ip3
            return self.dyk.with_overrides(n_ip3r=int(value)), float(ip3)
        return self.dyk, float(value)

    def label(self, value: float) -> str:
        return condition_label(self.conditions.axis, value)

    def with_seed(self, seed: Optional[int]) -> "PipelineConfig":
        """--seed 覆盖集合基准种子与训练种子"""
        if seed is None:
            return self
        return replace(self, ensemble=replace(self.ensemble, base_seed=int(seed)),
                       training=replace(self.training, seeds=(int(seed),)))


def condition_label(axis: str, value: float) -> str:
    """如 ip3_0.4、n_ip3r_500"""
    return f"{axis}_{float(value):g}"


def config_from_dict(document: Dict[str, Any], config_hash: str = "", path: Optional[str] = None) -> PipelineConfig:
    """由解析后的 YAML 文档构造配置

    Raises:
        ConfigError: 未知段、未知键、缺少必需键或取值非法
    """
    if not isinstance(document, dict):
        raise ConfigError("<root>", "配置文档必须是映射")
    for key in document:
        if key != "dyk" and key not in SECTIONS:
            raise ConfigError(key, f"未知的配置段: {key}")
    if "conditions" not in document:
        raise ConfigError("conditions", "缺少配置段: conditions")
    try:
        dyk = DykParams.from_dict(document.get("dyk") or {})
    except ConfigError:
        raise
    except DomainError as e:
        raise ConfigError("dyk", f"模型参数非法: {e}") from e
    sections = {name: _build_section(name, cls, document.get(name)) for name, cls in SECTIONS.items()}
    return PipelineConfig(dyk=dyk, config_hash=config_hash, path=path, **sections)


def load_config(path: str) -> PipelineConfig:
    """读取 YAML 配置并记录其 SHA-256

    Raises:
        ConfigError: 文件无法读取或内容非法
    """
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as e:
        raise ConfigError("--config", f"无法读取配置文件 {path}: {e}") from e
    try:
        document = yaml.safe_load(raw.decode("utf-8")) or {}
    except yaml.YAMLError as e:
        raise ConfigError("--config", f"配置文件不是合法的 YAML: {e}") from e
    config = config_from_dict(document, hashlib.sha256(raw).hexdigest(), path)
    logger.info(f"已加载配置 {path} (sha256={config.config_hash[:12]})")
    return config
