#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
IP3 受体钙振荡反应模型

- 浓度速率到分子速率的换算
- 三亚基受体状态网络与通道输运反应
- 确定性 De Young–Keizer 参考模型（定步长 RK4，可对多个 [IP3] 向量化）
- 受体亚基数的数量级估计
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import linalg

from ..errors import DomainError
from ..model.dyk_params import AVOGADRO, DykParams
from ..model.reaction import Compartment, Reaction, ReactionNetwork, Species

logger = logging.getLogger("dyk_model")

CA_CYT = "Ca_Cyt"
CA_ER = "Ca_ER"
IP3 = "IP3"
OPEN_STATE = "S110"
# 下标 ijk: i = IP3 结合位, j = 激活钙结合位, k = 抑制钙结合位
RECEPTOR_STATES: List[str] = [f"S{i}{j}{k}" for i in (0, 1) for j in (0, 1) for k in (0, 1)]
LIGANDS = (CA_CYT, IP3)


def concentration_to_molecular_rate(k: float, orders: Sequence[int], volume: float) -> float:
    """浓度速率 k 换算为分子速率 γ

    γ = k·N·∏ m_i!/N^{m_i}，N = c_A·V·1e-6 为每 µM 的粒子数。

    Args:
        k: 浓度速率
        orders: 各反应物的级数 m_i
        volume: 体积（升）

    Returns:
        分子速率 γ

    Raises:
        DomainError: 体积非正、级数为空或速率为负
    """
    if volume <= 0:
        raise DomainError(f"体积必须为正: {volume}")
    if not orders:
        raise DomainError("反应物级数不能为空")
    if k < 0:
        raise DomainError(f"速率不能为负: {k}")
    n = AVOGADRO * volume * 1e-6
    gamma = k * n
    for m in orders:
        gamma *= math.factorial(int(m)) / n ** int(m)
    return gamma


def subunit_transitions() -> List[Tuple[str, str, int, str]]:
    """受体亚基的全部可逆跃迁 (结合前状态, 结合后状态, 速率族编号, 配体)"""
    pairs = []
    for j in (0, 1):
        pairs.append((f"S0{j}0", f"S1{j}0", 1, IP3))
        pairs.append((f"S1{j}0", f"S1{j}1", 2, CA_CYT))
        pairs.append((f"S0{j}1", f"S1{j}1", 3, IP3))
        pairs.append((f"S0{j}0", f"S0{j}1", 4, CA_CYT))
    for i in (0, 1):
        for k in (0, 1):
            pairs.append((f"S{i}0{k}", f"S{i}1{k}", 5, CA_CYT))
    return pairs


def dyk_species() -> List[Species]:
    species = [Species(name, Compartment.MEMBRANE) for name in RECEPTOR_STATES]
    species.append(Species(CA_CYT, Compartment.CYTOSOL))
    species.append(Species(CA_ER, Compartment.ER))
    species.append(Species(IP3, Compartment.CYTOSOL))
    return species


def transport_rates(p: DykParams) -> Tuple[float, float]:
    """通道输运的分子速率 (γ_1f, γ_1b)"""
    if p.n_ip3r == 0:
        raise DomainError("受体亚基数为 0 时输运速率无定义")
    n3 = float(p.n_ip3r) ** 3
    return 6.0 * p.v1 / n3, 6.0 * p.c1 * p.v1 / n3


def build_dyk_network(p: DykParams) -> ReactionNetwork:
    """构建随机 DYK 反应网络

    12 对亚基可逆反应加一对输运反应 3S110 + Ca_ER ⇌ 3S110 + Ca_Cyt。
    """
    gamma_f, gamma_b = transport_rates(p)
    reactions = []
    for before, after, i, ligand in subunit_transitions():
        alpha = concentration_to_molecular_rate(p.binding_rate(i), [1, 1], p.v_cyt)
        beta = p.unbinding_rate(i)
        reactions.append(Reaction({before: 1, ligand: 1}, {after: 1}, alpha, f"{before}+{ligand}->{after}", "subunit"))
        reactions.append(Reaction({after: 1}, {before: 1, ligand: 1}, beta, f"{after}->{before}+{ligand}", "subunit"))
    reactions.append(Reaction({OPEN_STATE: 3, CA_ER: 1}, {OPEN_STATE: 3, CA_CYT: 1}, gamma_f,
                              "3S110+Ca_ER->3S110+Ca_Cyt", "transport"))
    reactions.append(Reaction({OPEN_STATE: 3, CA_CYT: 1}, {OPEN_STATE: 3, CA_ER: 1}, gamma_b,
                              "3S110+Ca_Cyt->3S110+Ca_ER", "transport"))
    network = ReactionNetwork(dyk_species(), reactions)
    logger.debug(f"构建 DYK 网络: {len(network)} 个反应, γ_1f={gamma_f:.4g}, γ_1b={gamma_b:.4g}")
    return network


def _generator_parts(p: DykParams) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """亚基速率矩阵的三个部分 Q = Q0 + [Ca]·Q_ca + [IP3]·Q_ip3"""
    index = {name: i for i, name in enumerate(RECEPTOR_STATES)}
    q0 = np.zeros((8, 8))
    q_ca = np.zeros((8, 8))
    q_ip3 = np.zeros((8, 8))
    for before, after, i, ligand in subunit_transitions():
        s, t = index[before], index[after]
        target = q_ca if ligand == CA_CYT else q_ip3
        target[s, t] += p.binding_rate(i)
        target[s, s] -= p.binding_rate(i)
        q0[t, s] += p.unbinding_rate(i)
        q0[t, t] -= p.unbinding_rate(i)
    return q0, q_ca, q_ip3


def subunit_generator(p: DykParams, ca: float, ip3: float) -> np.ndarray:
    """固定配体浓度下的 8×8 亚基速率矩阵（行和为零）"""
    q0, q_ca, q_ip3 = _generator_parts(p)
    return q0 + ca * q_ca + ip3 * q_ip3


def subunit_stationary_distribution(p: DykParams, ca: float, ip3: float) -> np.ndarray:
    """亚基马尔可夫链的平稳分布 π（πQ = 0, Σπ = 1）"""
    q = subunit_generator(p, ca, ip3)
    system = np.vstack([q.T, np.ones((1, 8))])
    rhs = np.zeros(9)
    rhs[-1] = 1.0
    pi, *_ = linalg.lstsq(system, rhs)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


@dataclass
class DeterministicRun:
    """确定性积分结果，ca / ca_er 的形状为 (len(ip3), len(times))"""
    times: np.ndarray
    ip3: np.ndarray
    ca: np.ndarray
    ca_er: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        frames = []
        for row, value in enumerate(self.ip3):
            frames.append(pd.DataFrame({"ip3": value, "t": self.times, "ca": self.ca[row], "ca_er": self.ca_er[row]}))
        return pd.concat(frames, ignore_index=True)


def sweep_deterministic_dyk(p: DykParams, ip3_values: Sequence[float], horizon: float,
                            dt: float = 1e-4, sample_dt: float = None) -> DeterministicRun:
    """对一组钳制的 [IP3] 同时积分确定性 DYK 方程

    受体分数 x_ijk 由亚基速率矩阵驱动，胞质钙与内质网钙（以胞质体积计）
    以相反的通量更新，总钙 c0 守恒。初值取 μ0_Ca 下的亚基平稳分布。
    """
    if dt <= 0:
        raise DomainError(f"积分步长必须为正: {dt}")
    if horizon <= 0:
        raise DomainError(f"积分时长必须为正: {horizon}")
    ip3 = np.atleast_1d(np.asarray(ip3_values, dtype=float))
    q0, q_ca, q_ip3 = _generator_parts(p)
    open_index = RECEPTOR_STATES.index(OPEN_STATE)

    ca = np.full(ip3.shape, float(p.mu0_ca))
    er = p.c0 - ca
    x = np.stack([subunit_stationary_distribution(p, p.mu0_ca, value) for value in ip3])

    def rhs(x, ca, er):
        dx = x @ q0 + ca[:, None] * (x @ q_ca) + ip3[:, None] * (x @ q_ip3)
        x_open = x[:, open_index]
        flux = (p.v2 + p.v1 * x_open ** 3) * (er - p.c1 * ca) - p.v3 * ca ** 2 / (ca ** 2 + p.k3 ** 2)
        return dx, flux

    n_steps = int(round(horizon / dt))
    every = max(1, int(round((sample_dt or p.dt_write) / dt)))
    times, ca_rows, er_rows = [0.0], [ca.copy()], [er.copy()]
    for step in range(1, n_steps + 1):
        k1x, k1 = rhs(x, ca, er)
        k2x, k2 = rhs(x + 0.5 * dt * k1x, ca + 0.5 * dt * k1, er - 0.5 * dt * k1)
        k3x, k3 = rhs(x + 0.5 * dt * k2x, ca + 0.5 * dt * k2, er - 0.5 * dt * k2)
        k4x, k4 = rhs(x + dt * k3x, ca + dt * k3, er - dt * k3)
        x = x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        increment = dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        ca = ca + increment
        er = er - increment
        if step % every == 0:
            times.append(step * dt)
            ca_rows.append(ca.copy())
            er_rows.append(er.copy())
    if not np.all(np.isfinite(ca)):
        raise DomainError(f"确定性积分发散，请减小步长: dt={dt}")
    return DeterministicRun(np.asarray(times), ip3, np.stack(ca_rows, axis=1), np.stack(er_rows, axis=1))


def integrate_deterministic_dyk(p: DykParams, ip3: float, horizon: float, dt: float = 1e-4) -> Tuple[np.ndarray, np.ndarray]:
    """单个 [IP3] 的确定性积分，返回按 dt_write 采样的 (t, [Ca_Cyt])"""
    run = sweep_deterministic_dyk(p, [ip3], horizon, dt)
    return run.times, run.ca[0]


def peak_to_trough(times: np.ndarray, values: np.ndarray, window: float = 40.0) -> float:
    """最后 window 秒内的峰谷差"""
    mask = times >= times[-1] - window - 1e-9
    if not np.any(mask):
        raise DomainError(f"窗口为空: {window}")
    tail = np.asarray(values)[..., mask]
    return float(np.max(tail) - np.min(tail))


def deterministic_range(p: DykParams, ip3_values: Sequence[float], horizon: float = 200.0,
                        dt: float = 1e-3, window: float = 40.0) -> pd.DataFrame:
    """确定性分支的振荡范围：最后 window 秒内 [Ca_Cyt] 的最小值与最大值"""
    run = sweep_deterministic_dyk(p, ip3_values, horizon, dt)
    mask = run.times >= run.times[-1] - window - 1e-9
    tail = run.ca[:, mask]
    frame = pd.DataFrame({
        "ip3": run.ip3,
        "ca_min": tail.min(axis=1),
        "ca_max": tail.max(axis=1),
    })
    frame["oscillating"] = (frame["ca_max"] - frame["ca_min"]) > 0.1
    logger.info(f"确定性扫描完成: {len(run.ip3)} 个 [IP3] 值, 振荡 {int(frame['oscillating'].sum())} 个")
    return frame


def estimate_subunit_count(v_cyt: float, dx: float, lam: float, c1: float = 0.185) -> float:
    """受体亚基数的数量级估计 160πλ/Δx² · (3c1V/(4π))^{2/3}

    Args:
        v_cyt: 胞质体积（升）
        dx: 受体簇间距（µm）
        lam: 内质网表面积相对球面的放大倍数
        c1: 内质网与胞质体积比
    """
    if v_cyt <= 0 or dx <= 0 or lam <= 0:
        raise DomainError(f"输入必须为正: v_cyt={v_cyt}, dx={dx}, lam={lam}")
    volume_um3 = v_cyt * 1e15
    return 160.0 * math.pi * lam / dx ** 2 * (3.0 * c1 * volume_um3 / (4.0 * math.pi)) ** (2.0 / 3.0)
