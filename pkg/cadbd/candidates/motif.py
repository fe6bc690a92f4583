#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
反应基元

每个基元是一条速率为 1 的质量作用反应，由倾向函数的单项式（参与的物种下标）
和化学计量变化给出。物种下标覆盖 可见物种 ∪ 隐物种（X1..Xq）。
"""
from abc import ABC, abstractmethod
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

from ..errors import DomainError


class MotifKind(str, Enum):
    """基元种类"""
    BIRTH = "Birth"                  # P → 2P
    DEATH = "Death"                  # H → ∅
    PREDATOR_PREY = "PredatorPrey"   # H + P → 2H
    CONSERVING = "Conserving"        # A + R → R


def hidden_species_names(q: int) -> List[str]:
    """隐物种名 X1..Xq"""
    return [f"X{k + 1}" for k in range(q)]


class ReactionMotif(ABC):
    """反应基元抽象基类

    Args:
        roles: 角色名 -> 物种名
        species: 全部物种名（可见在前，隐物种在后）

    Raises:
        DomainError: 角色不全、指向未知物种或物种重复
    """

    kind: MotifKind
    role_names: Tuple[str, ...] = ()

    def __init__(self, roles: Dict[str, str], species: Sequence[str]):
        missing = [r for r in self.role_names if r not in roles]
        extra = [r for r in roles if r not in self.role_names]
        if missing or extra:
            raise DomainError(f"{self.kind.value} 基元的角色应为 {list(self.role_names)}，实际为 {sorted(roles)}")
        self.species = list(species)
        self.roles = {r: roles[r] for r in self.role_names}
        self.indices: Dict[str, int] = {}
        for role, name in self.roles.items():
            if name not in self.species:
                raise DomainError(f"{self.kind.value} 基元的角色 {role} 指向未知物种: {name}")
            self.indices[role] = self.species.index(name)
        if len(set(self.indices.values())) != len(self.indices):
            raise DomainError(f"{self.kind.value} 基元的角色物种必须互不相同: {self.roles}")

    @abstractmethod
    def propensity_indices(self) -> Tuple[int, ...]:
        """倾向函数单项式中的物种下标（一阶或二阶）"""
        pass

    @abstractmethod
    def stoichiometry(self) -> Dict[int, int]:
        """物种下标 -> 计数变化"""
        pass

    def validate(self, n_species: int) -> None:
        """检查角色下标落在矩阵范围内"""
        for role, index in self.indices.items():
            if not 0 <= index < n_species:
                raise DomainError(f"{self.kind.value} 基元角色 {role} 的下标 {index} 超出物种数 {n_species}")

    def describe(self) -> str:
        return f"{self.kind.value}({', '.join(f'{r}={s}' for r, s in self.roles.items())})"

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "roles": dict(self.roles)}

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ReactionMotif) and self.to_dict() == other.to_dict() \
            and self.indices == other.indices

    def __hash__(self) -> int:
        return hash((self.kind, tuple(sorted(self.indices.items()))))

    def __repr__(self) -> str:
        return self.describe()


class BirthMotif(ReactionMotif):
    """P → 2P"""
    kind = MotifKind.BIRTH
    role_names = ("P",)

    def propensity_indices(self) -> Tuple[int, ...]:
        return (self.indices["P"],)

    def stoichiometry(self) -> Dict[int, int]:
        return {self.indices["P"]: 1}


class DeathMotif(ReactionMotif):
    """H → ∅"""
    kind = MotifKind.DEATH
    role_names = ("H",)

    def propensity_indices(self) -> Tuple[int, ...]:
        return (self.indices["H"],)

    def stoichiometry(self) -> Dict[int, int]:
        return {self.indices["H"]: -1}


class PredatorPreyMotif(ReactionMotif):
    """H + P → 2H"""
    kind = MotifKind.PREDATOR_PREY
    role_names = ("H", "P")

    def propensity_indices(self) -> Tuple[int, ...]:
        return (self.indices["H"], self.indices["P"])

    def stoichiometry(self) -> Dict[int, int]:
        return {self.indices["H"]: 1, self.indices["P"]: -1}


class ConservingMotif(ReactionMotif):
    """A + R → R，R 为守恒物种

    Args:
        conserved: 守恒物种名；给出时 R 必须是它
    """
    kind = MotifKind.CONSERVING
    role_names = ("A", "R")

    def __init__(self, roles: Dict[str, str], species: Sequence[str], conserved: Optional[str] = None):
        super().__init__(roles, species)
        if conserved is not None and self.roles["R"] != conserved:
            raise DomainError(f"Conserving 基元的 R 必须是守恒物种 {conserved}，实际为 {self.roles['R']}")

    def propensity_indices(self) -> Tuple[int, ...]:
        return (self.indices["A"], self.indices["R"])

    def stoichiometry(self) -> Dict[int, int]:
        # R 作为催化剂不变
        return {self.indices["A"]: -1}


class MotifFactory:
    """反应基元工厂"""

    motif_map = {
        MotifKind.BIRTH.value: BirthMotif,
        MotifKind.DEATH.value: DeathMotif,
        MotifKind.PREDATOR_PREY.value: PredatorPreyMotif,
        MotifKind.CONSERVING.value: ConservingMotif,
    }

    @staticmethod
    def create_motif(kind: str, roles: Dict[str, str], species: Sequence[str], **kwargs) -> ReactionMotif:
        """创建指定种类的基元

        Args:
            kind: 基元种类名（Birth/Death/PredatorPrey/Conserving）
            roles: 角色名 -> 物种名
            species: 全部物种名
            **kwargs: 传递给基元构造函数的参数（如 conserved）

        Raises:
            DomainError: 如果基元种类无效
        """
        kind = kind.value if isinstance(kind, MotifKind) else kind
        if kind not in MotifFactory.motif_map:
            raise DomainError(f"未知的反应基元: {kind}")
        motif_class = MotifFactory.motif_map[kind]
        if motif_class is not ConservingMotif:
            kwargs.pop("conserved", None)
        return motif_class(roles, species, **kwargs)

    @staticmethod
    def from_dict(data: Dict[str, Any], species: Sequence[str], conserved: Optional[str] = None) -> ReactionMotif:
        return MotifFactory.create_motif(data["kind"], data["roles"], species, conserved=conserved)


def lotka_volterra_motifs(species: Sequence[str]) -> List[ReactionMotif]:
    """每个物种一个 Birth 与一个 Death，每个有序物种对一个 PredatorPrey"""
    motifs: List[ReactionMotif] = []
    for name in species:
        motifs.append(BirthMotif({"P": name}, species))
        motifs.append(DeathMotif({"H": name}, species))
    for hunter in species:
        for prey in species:
            if hunter != prey:
                motifs.append(PredatorPreyMotif({"H": hunter, "P": prey}, species))
    return motifs


def conserving_motifs(species: Sequence[str], conserved: str) -> List[ReactionMotif]:
    """守恒物种作为 R，其余每个物种作为 A 各一个 Conserving 基元"""
    if conserved not in species:
        raise DomainError(f"守恒物种不在物种列表中: {conserved}")
    return [ConservingMotif({"A": name, "R": conserved}, species, conserved)
            for name in species if name != conserved]


def motifs_to_dict(motifs: Sequence[ReactionMotif]) -> List[Dict[str, Any]]:
    return [m.to_dict() for m in motifs]


def motifs_from_dict(data: Sequence[Dict[str, Any]], species: Sequence[str], conserved: Optional[str] = None) -> List[ReactionMotif]:
    return [MotifFactory.from_dict(d, species, conserved) for d in data]
