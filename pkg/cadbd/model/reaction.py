#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
反应网络数据模型

Species / Reaction / ReactionNetwork 三个不可变类型，
以及质量作用反应网络的 JSON 序列化。
"""
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, ClassVar, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import DomainError


class Compartment(str, Enum):
    """物种所在区室"""
    CYTOSOL = "Cytosol"
    ER = "ER"
    MEMBRANE = "Membrane"


@dataclass(frozen=True)
class Species:
    """物种"""
    name: str
    compartment: Compartment = Compartment.CYTOSOL

    def __post_init__(self):
        if not self.name:
            raise DomainError("物种名称不能为空")
        if not isinstance(self.compartment, Compartment):
            object.__setattr__(self, "compartment", Compartment(self.compartment))

    def to_dict(self) -> Dict[str, str]:
        return {"name": self.name, "compartment": self.compartment.value}

    @classmethod
    def from_dict(cls, data: Dict[str, str]) -> "Species":
        return cls(name=data["name"], compartment=Compartment(data.get("compartment", "Cytosol")))


@dataclass(frozen=True, eq=False)
class Reaction:
    """质量作用反应

    reactants / products 为 物种名 -> 级数 的映射，rate 为分子速率 γ（每秒）。
    family 用于区分受体亚基反应与通道输运反应。
    """

    # 类属性，定义属性的序列化映射
    serializable_fields: ClassVar[Dict[str, str]] = {
        "reactants": "reactants",
        "products": "products",
        "rate": "rate",
        "label": "label",
        "family": "family",
    }

    reactants: Dict[str, int] = field(default_factory=dict)
    products: Dict[str, int] = field(default_factory=dict)
    rate: float = 0.0
    label: str = ""
    family: str = "subunit"

    def __post_init__(self):
        if not self.reactants and not self.products:
            raise DomainError(f"反应 {self.label} 的反应物和产物不能同时为空")
        if not np.isfinite(self.rate) or self.rate < 0:
            raise DomainError(f"反应 {self.label} 的速率必须为非负有限值: {self.rate}")
        for side in (self.reactants, self.products):
            for name, order in side.items():
                if int(order) != order or order < 0:
                    raise DomainError(f"反应 {self.label} 中 {name} 的级数非法: {order}")

    @property
    def order(self) -> int:
        """反应总级数"""
        return int(sum(self.reactants.values()))

    def stoichiometry(self, species_names: Sequence[str]) -> np.ndarray:
        """化学计量向量 ν = products − reactants"""
        nu = np.zeros(len(species_names), dtype=np.int64)
        index = {name: i for i, name in enumerate(species_names)}
        for name, order in self.products.items():
            nu[index[name]] += order
        for name, order in self.reactants.items():
            nu[index[name]] -= order
        return nu

    def with_fixed(self, fixed: Iterable[str]) -> "Reaction":
        """返回固定指定物种拷贝数的反应（这些物种只作为催化剂参与倾向函数）"""
        fixed = set(fixed)
        products = {k: v for k, v in self.products.items() if k not in fixed}
        for name in fixed:
            if name in self.reactants:
                products[name] = self.reactants[name]
        return Reaction(dict(self.reactants), products, self.rate, self.label, self.family)

    def to_dict(self) -> Dict[str, Any]:
        result = {}
        for attr_name, dict_key in self.serializable_fields.items():
            value = getattr(self, attr_name)
            if isinstance(value, dict):
                value = {k: int(v) for k, v in value.items()}
            result[dict_key] = value
        return result

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Reaction":
        reverse_mapping = {v: k for k, v in cls.serializable_fields.items()}
        kwargs = {reverse_mapping[k]: v for k, v in data.items() if k in reverse_mapping}
        kwargs["rate"] = float(kwargs.get("rate", 0.0))
        return cls(**kwargs)


class ReactionNetwork:
    """反应网络

    物种有序列表加反应列表，构造后不再修改。
    """

    def __init__(self, species: Sequence[Species], reactions: Sequence[Reaction]):
        names = [s.name for s in species]
        if len(set(names)) != len(names):
            raise DomainError(f"物种名称重复: {names}")
        known = set(names)
        for reaction in reactions:
            unknown = (set(reaction.reactants) | set(reaction.products)) - known
            if unknown:
                raise DomainError(f"反应 {reaction.label} 引用了未知物种: {sorted(unknown)}")
        self._species: Tuple[Species, ...] = tuple(species)
        self._reactions: Tuple[Reaction, ...] = tuple(reactions)

    @property
    def species(self) -> Tuple[Species, ...]:
        return self._species

    @property
    def reactions(self) -> Tuple[Reaction, ...]:
        return self._reactions

    @property
    def species_names(self) -> List[str]:
        return [s.name for s in self._species]

    def index(self, name: str) -> int:
        """物种在网络中的下标"""
        try:
            return self.species_names.index(name)
        except ValueError:
            raise DomainError(f"网络中没有物种: {name}") from None

    def stoichiometry_matrix(self) -> np.ndarray:
        """R × N 的化学计量矩阵"""
        names = self.species_names
        return np.array([r.stoichiometry(names) for r in self._reactions], dtype=np.int64).reshape(
            len(self._reactions), len(names))

    def subnetwork(self, families: Iterable[str]) -> "ReactionNetwork":
        """只保留指定族的反应"""
        families = set(families)
        return ReactionNetwork(self._species, [r for r in self._reactions if r.family in families])

    def with_fixed(self, fixed: Iterable[str]) -> "ReactionNetwork":
        """冻结指定物种的拷贝数"""
        fixed = list(fixed)
        return ReactionNetwork(self._species, [r.with_fixed(fixed) for r in self._reactions])

    def reactions_of(self, family: str) -> List[Reaction]:
        return [r for r in self._reactions if r.family == family]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "species": [s.to_dict() for s in self._species],
            "reactions": [r.to_dict() for r in self._reactions],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ReactionNetwork":
        return cls([Species.from_dict(s) for s in data["species"]],
                   [Reaction.from_dict(r) for r in data["reactions"]])

    @classmethod
    def from_json(cls, json_str: str) -> "ReactionNetwork":
        return cls.from_dict(json.loads(json_str))

    def __len__(self) -> int:
        return len(self._reactions)

    def __repr__(self) -> str:
        return f"ReactionNetwork(species={self.species_names}, reactions={len(self._reactions)})"


def decay_network(species: str = "A", rate: float = 1.0) -> ReactionNetwork:
    """单物种衰减网络 A -> ∅，用于解析解校验"""
    return ReactionNetwork([Species(species)], [Reaction({species: 1}, {}, rate, f"{species}->0", "decay")])


def birth_network(species: str = "P", rate: float = 1.0) -> ReactionNetwork:
    """单物种增殖网络 P -> 2P"""
    return ReactionNetwork([Species(species)], [Reaction({species: 1}, {species: 2}, rate, f"{species}->2{species}", "birth")])


def network_from_counts(network: ReactionNetwork, counts: Optional[Dict[str, int]]) -> np.ndarray:
    """把 物种名 -> 计数 的映射展开成按网络物种顺序排列的整数向量"""
    vector = np.zeros(len(network.species), dtype=np.int64)
    for name, value in (counts or {}).items():
        vector[network.index(name)] = int(value)
    return vector
