#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
De Young–Keizer 模型参数

字段名与参数表一致，可以直接从 YAML 配置的 dyk 段加载。
"""
import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict

import yaml

from ..errors import ConfigError, DomainError

# 阿伏伽德罗常数 (1/mol)
AVOGADRO = 6.02214076e23


@dataclass(frozen=True)
class DykParams:
    """随机模拟参数，默认值取自参数表（V_cyt = 1e-14 L, 100 个受体亚基）"""

    c0: float = 2.0            # µM，以胞质体积计的总钙
    c1: float = 0.185          # 内质网与胞质体积比
    v1: float = 6.0            # 1/s，通道最大通量
    v2: float = 0.11           # 1/s，泄漏通量
    v3: float = 0.9            # µM/s，泵最大摄取
    k3: float = 0.1            # µM，泵激活常数
    a1: float = 400.0          # 1/(µM·s)
    a2: float = 0.2
    a3: float = 400.0
    a4: float = 0.2
    a5: float = 20.0
    d1: float = 0.13           # µM
    d2: float = 1.049
    d3: float = 0.9434
    d4: float = 0.1445
    d5: float = 0.08234
    mu0_ca: float = 0.25       # µM
    mu0_ip3: float = 0.5
    sigma0_ca: float = 1e-3
    sigma0_ip3: float = 1e-3
    v_cyt: float = 1e-14       # L
    dt_write: float = 0.1      # s
    dt_ode: float = 1e-3
    t_max: float = 50.0
    n_ip3r: int = 100

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or value != value:
                raise DomainError(f"参数 {f.name} 必须为数值: {value}")
        rates = ("c0", "v1", "v2", "v3", "k3", "a1", "a2", "a3", "a4", "a5",
                 "d1", "d2", "d3", "d4", "d5", "mu0_ca", "mu0_ip3", "sigma0_ca", "sigma0_ip3")
        for name in rates:
            if getattr(self, name) < 0:
                raise DomainError(f"参数 {name} 不能为负: {getattr(self, name)}")
        if self.v_cyt <= 0:
            raise DomainError(f"胞质体积必须为正: {self.v_cyt}")
        if not 0 < self.c1 < 1:
            raise DomainError(f"c1 必须位于 (0, 1): {self.c1}")
        if not 0 < self.dt_ode <= self.dt_write <= self.t_max:
            raise DomainError(
                f"时间步需满足 0 < dt_ode <= dt_write <= t_max: {self.dt_ode}, {self.dt_write}, {self.t_max}")
        if int(self.n_ip3r) != self.n_ip3r or self.n_ip3r < 0:
            raise DomainError(f"受体亚基数必须为非负整数: {self.n_ip3r}")
        object.__setattr__(self, "n_ip3r", int(self.n_ip3r))

    @property
    def particles_per_micromolar(self) -> float:
        """1 µM 对应的粒子数 c_A·V·1e-6"""
        return AVOGADRO * self.v_cyt * 1e-6

    def binding_rate(self, i: int) -> float:
        """浓度结合速率 a_i"""
        return float(getattr(self, f"a{i}"))

    def unbinding_rate(self, i: int) -> float:
        """解离速率 b_i = a_i · d_i"""
        return float(getattr(self, f"a{i}") * getattr(self, f"d{i}"))

    def with_overrides(self, **kwargs) -> "DykParams":
        return replace(self, **kwargs)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def params_hash(self) -> str:
        """参数的稳定哈希"""
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DykParams":
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(f"dyk.{key}", f"未知的模型参数: dyk.{key}")
        kwargs = {}
        for key, value in data.items():
            try:
                kwargs[key] = int(value) if key == "n_ip3r" else float(value)
            except (TypeError, ValueError):
                raise ConfigError(f"dyk.{key}", f"模型参数不是数值: dyk.{key}={value!r}") from None
        return cls(**kwargs)

    @classmethod
    def from_yaml(cls, path: str, section: str = "dyk") -> "DykParams":
        """从 YAML 文件加载，section 为 None 时读取整个文档"""
        with open(path, "r", encoding="utf-8") as fh:
            document = yaml.safe_load(fh) or {}
        data = document.get(section, {}) if section else document
        if not isinstance(data, dict):
            raise ConfigError(section or "<root>", f"配置段必须是映射: {section}")
        return cls.from_dict(data)
