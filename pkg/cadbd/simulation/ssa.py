#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
混合随机模拟

Gillespie 直接法驱动受体与输运反应，泄漏/泵电流按 Δt_ode 窗口以确定性
方式施加到 Ca_Cyt 与 Ca_ER 上，小数部分由累加器携带。
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Protocol, Sequence, Union

import numpy as np

from ..errors import DomainError, SimulationFault
from ..model.dyk_params import DykParams
from ..model.reaction import ReactionNetwork, network_from_counts
from .dyk import CA_CYT, CA_ER, IP3, RECEPTOR_STATES, build_dyk_network
from .trajectory import Trajectory

logger = logging.getLogger("ssa_hybrid")

SeedLike = Union[int, np.random.Generator]


class CurrentModel(Protocol):
    """确定性电流：返回每秒流入 source -> target 的粒子数"""
    source: str
    target: str

    def rate(self, counts: Sequence[int]) -> float: ...


class DykCurrents:
    """泄漏电流 J1 与泵电流 J2 的净通量 (J1 − J2)，单位换算为粒子/秒"""

    source = CA_ER
    target = CA_CYT

    def __init__(self, p: DykParams, network: ReactionNetwork):
        self.p = p
        self.n = p.particles_per_micromolar
        self._ca = network.index(CA_CYT)
        self._er = network.index(CA_ER)

    def rate(self, counts: Sequence[int]) -> float:
        p = self.p
        ca = counts[self._ca] / self.n
        leak = p.v2 * (counts[self._er] - p.c1 * counts[self._ca])
        denominator = ca * ca + p.k3 * p.k3
        pump = self.n * p.v3 * ca * ca / denominator if p.v3 > 0 and denominator > 0 else 0.0
        return leak - pump


@dataclass
class SimState:
    """模拟状态：计数、时间与电流小数累加器"""
    counts: List[int]
    t: float = 0.0
    ca_remainder: float = 0.0


class UniformStream:
    """从 PCG64 生成器分块取出的 [0, 1) 均匀随机数"""

    def __init__(self, rng: np.random.Generator, block: int = 4096):
        self.rng = rng
        self.block = block
        self._buffer = rng.random(block)
        self._pos = 0

    def next(self) -> float:
        if self._pos >= self.block:
            self._buffer = self.rng.random(self.block)
            self._pos = 0
        value = self._buffer[self._pos]
        self._pos += 1
        return float(value)


class HybridSimulator:
    """任意质量作用网络的直接法模拟器，可选耦合确定性电流"""

    def __init__(self, network: ReactionNetwork, currents: Optional[CurrentModel] = None):
        self.network = network
        self.currents = currents
        names = network.species_names
        index = {name: i for i, name in enumerate(names)}
        nu = network.stoichiometry_matrix()
        self._labels = [r.label for r in network.reactions]
        self._rates = [float(r.rate) for r in network.reactions]
        self._reactants = [tuple((index[n], int(m)) for n, m in r.reactants.items() if m > 0)
                           for r in network.reactions]
        self._changes = [tuple((i, int(nu[j, i])) for i in range(len(names)) if nu[j, i] != 0)
                         for j in range(len(network.reactions))]
        readers: Dict[int, List[int]] = {i: [] for i in range(len(names))}
        for j, reactants in enumerate(self._reactants):
            for i, _ in reactants:
                readers[i].append(j)
        self._dependents = [sorted({k for i, _ in changes for k in readers[i]}) for changes in self._changes]
        if currents is not None:
            self._current_species = (index[currents.source], index[currents.target])
            self._current_dependents = sorted(set(readers[self._current_species[0]]) |
                                              set(readers[self._current_species[1]]))

    def propensity(self, j: int, counts: Sequence[int]) -> float:
        """精确组合数形式的倾向函数 γ∏C(n, m)"""
        a = self._rates[j]
        if a == 0.0:
            return 0.0
        for i, m in self._reactants[j]:
            n = counts[i]
            if n < m:
                return 0.0
            a *= n if m == 1 else math.comb(n, m)
        return a

    def propensities(self, counts: Sequence[int]) -> List[float]:
        return [self.propensity(j, counts) for j in range(len(self._rates))]

    def _diagnostic(self, counts: Sequence[int], t: float, **extra) -> Dict[str, object]:
        state = {"t": t, "counts": dict(zip(self.network.species_names, (int(c) for c in counts)))}
        state.update(extra)
        return state

    def _fire(self, j: int, counts: List[int], props: List[float], t: float) -> float:
        """执行反应 j，返回总倾向的增量"""
        for i, delta in self._changes[j]:
            counts[i] += delta
            if counts[i] < 0:
                raise SimulationFault("出现负计数", self._diagnostic(counts, t, reaction=self._labels[j]))
        change = 0.0
        for k in self._dependents[j]:
            value = self.propensity(k, counts)
            change += value - props[k]
            props[k] = value
        return change

    @staticmethod
    def _select(props: List[float], target: float) -> int:
        acc = 0.0
        last = -1
        for j, a in enumerate(props):
            if a > 0.0:
                acc += a
                last = j
                if target < acc:
                    return j
        return last

    def _check_total(self, total: float, counts: Sequence[int], t: float) -> None:
        if not math.isfinite(total) or total < 0:
            raise SimulationFault("倾向函数溢出或非有限", self._diagnostic(counts, t, total=total))

    def _advance(self, state: SimState, t_end: float, props: List[float], stream: UniformStream) -> None:
        """在 [state.t, t_end) 内执行直接法；超过窗口末端的候选事件被丢弃（指数分布无记忆）"""
        counts = state.counts
        t = state.t
        total = math.fsum(props)
        self._check_total(total, counts, t)
        while total > 0.0:
            tau = -math.log(1.0 - stream.next()) / total
            if t + tau >= t_end:
                break
            t += tau
            j = self._select(props, stream.next() * total)
            total += self._fire(j, counts, props, t)
            if total <= 0.0:
                total = math.fsum(props)
        state.t = t_end

    def _apply_currents(self, state: SimState, dt: float, props: List[float]) -> None:
        """窗口边界施加电流：整数部分改变计数，小数部分留在累加器"""
        counts = state.counts
        rate = self.currents.rate(counts)
        if not math.isfinite(rate):
            raise SimulationFault("电流为非有限值", self._diagnostic(counts, state.t, current=rate))
        state.ca_remainder += rate * dt
        moved = math.trunc(state.ca_remainder)
        if moved == 0:
            return
        state.ca_remainder -= moved
        source, target = self._current_species
        counts[target] += moved
        counts[source] -= moved
        if counts[target] < 0 or counts[source] < 0:
            raise SimulationFault("电流导致负计数", self._diagnostic(counts, state.t, moved=moved))
        for k in self._current_dependents:
            props[k] = self.propensity(k, counts)

    def run(self, init_counts: Sequence[int], t_max: float, dt_write: float, dt_ode: float,
            rng: SeedLike, seed: int = 0) -> Trajectory:
        """从 t=0 运行到 t_max，每 dt_write 记录一次计数

        Args:
            init_counts: 按网络物种顺序排列的初始计数
            t_max: 模拟时长（秒）
            dt_write: 记录间隔
            dt_ode: 电流更新间隔
            rng: 随机数生成器或种子
            seed: 写入轨迹的种子标签

        Returns:
            Trajectory
        """
        if not 0 < dt_ode <= dt_write <= t_max:
            raise DomainError(f"时间步需满足 0 < dt_ode <= dt_write <= t_max: {dt_ode}, {dt_write}, {t_max}")
        counts = [int(c) for c in init_counts]
        if any(c < 0 for c in counts):
            raise DomainError(f"初始计数不能为负: {counts}")
        stream = UniformStream(np.random.default_rng(rng))
        state = SimState(counts)
        n_windows = int(round(t_max / dt_ode))
        every = max(1, int(round(dt_write / dt_ode)))
        props = self.propensities(counts)
        times, records = [0.0], [list(counts)]
        for window in range(1, n_windows + 1):
            self._advance(state, window * dt_ode, props, stream)
            if self.currents is not None:
                self._apply_currents(state, dt_ode, props)
            if window % every == 0:
                times.append((window // every) * dt_write)
                records.append(list(counts))
        return Trajectory(np.asarray(times), np.asarray(records, dtype=np.int64),
                          self.network.species_names, int(seed))

    def time_average(self, init_counts: Sequence[int], duration: float, average_from: float,
                     rng: SeedLike) -> np.ndarray:
        """不含电流的直接法，返回 [average_from, duration] 上按时间加权的平均计数"""
        if not 0 <= average_from < duration:
            raise DomainError(f"平均窗口非法: [{average_from}, {duration}]")
        counts = [int(c) for c in init_counts]
        stream = UniformStream(np.random.default_rng(rng))
        props = self.propensities(counts)
        total = math.fsum(props)
        acc = [0.0] * len(counts)
        t = 0.0
        events = 0
        while True:
            self._check_total(total, counts, t)
            t_next = t - math.log(1.0 - stream.next()) / total if total > 0.0 else math.inf
            lo = max(t, average_from)
            hi = min(t_next, duration)
            if hi > lo:
                span = hi - lo
                for i, c in enumerate(counts):
                    acc[i] += c * span
            if t_next >= duration:
                break
            t = t_next
            j = self._select(props, stream.next() * total)
            total += self._fire(j, counts, props, t)
            events += 1
            if events % 1024 == 0 or total <= 0.0:
                total = math.fsum(props)
        logger.debug(f"时间平均模拟完成: {events} 个事件")
        return np.asarray(acc) / (duration - average_from)


def largest_remainder_round(values: Sequence[float], total: int) -> np.ndarray:
    """把非负实数舍入为和恰为 total 的整数；余数相同时按下标先后分配"""
    values = np.asarray(values, dtype=float)
    if values.sum() > 0:
        values = values * (total / values.sum())
    floors = np.floor(values).astype(np.int64)
    deficit = int(total - floors.sum())
    if deficit < 0 or deficit > len(values):
        raise DomainError(f"无法把 {values} 舍入为和 {total}")
    order = np.argsort(-(values - floors), kind="stable")
    floors[order[:deficit]] += 1
    return floors


def equilibrate_receptors(network: ReactionNetwork, init_counts: Mapping[str, int], seed: SeedLike,
                          duration: float = 10.0, average_window: float = 4.0,
                          receptor_states: Sequence[str] = RECEPTOR_STATES,
                          fixed: Sequence[str] = (CA_CYT, IP3, CA_ER)) -> Dict[str, int]:
    """受体状态初始化

    全部受体从 S000 出发，只运行亚基反应且配体拷贝数固定，
    取最后 average_window 秒的时间平均并按最大余数法舍入。

    Returns:
        受体状态 -> 计数；受体数为 0 时返回空映射
    """
    n_total = int(sum(int(init_counts.get(s, 0)) for s in receptor_states))
    if n_total == 0:
        return {}
    if any(int(init_counts.get(s, 0)) != 0 for s in receptor_states[1:]):
        raise DomainError("受体初始化要求全部受体位于 S000")
    subunits = network.subnetwork(["subunit"]).with_fixed(fixed)
    start = network_from_counts(network, init_counts)
    average = HybridSimulator(subunits).time_average(start, duration, duration - average_window, seed)
    indices = [network.index(s) for s in receptor_states]
    rounded = largest_remainder_round(average[indices], n_total)
    return {s: int(c) for s, c in zip(receptor_states, rounded)}


def _positive_normal(rng: np.random.Generator, mean: float, std: float, attempts: int = 10000) -> float:
    """截去负值的正态抽样：负样本重新抽取"""
    for _ in range(attempts):
        value = mean + std * rng.standard_normal() if std > 0 else mean
        if value >= 0:
            return float(value)
    raise DomainError(f"无法从 N({mean}, {std}²) 抽到非负初值")


def initial_counts(p: DykParams, ip3_mean: float, rng: np.random.Generator) -> Dict[str, int]:
    """抽样初始 Ca / IP3 浓度并由总钙守恒得到 Ca_ER，受体全部置于 S000"""
    n = p.particles_per_micromolar
    ca0 = _positive_normal(rng, p.mu0_ca, p.sigma0_ca)
    ip3_0 = _positive_normal(rng, ip3_mean, p.sigma0_ip3)
    n_er = int(round((p.c0 - ca0) * n))
    if n_er < 0:
        raise DomainError(f"初始胞质钙超过总钙: {ca0} > {p.c0}")
    counts = {s: 0 for s in RECEPTOR_STATES}
    counts[RECEPTOR_STATES[0]] = p.n_ip3r
    counts.update({CA_CYT: int(round(ca0 * n)), CA_ER: n_er, IP3: int(round(ip3_0 * n))})
    return counts


def simulate_trajectory(p: DykParams, ip3_mean: float, seed: int,
                        network: Optional[ReactionNetwork] = None) -> Trajectory:
    """DYK 模型的一条混合随机轨迹，是 (参数, ip3_mean, seed) 的纯函数"""
    rng = np.random.default_rng(seed)
    network = network or build_dyk_network(p)
    counts = initial_counts(p, ip3_mean, rng)
    counts.update(equilibrate_receptors(network, counts, rng))
    simulator = HybridSimulator(network, DykCurrents(p, network))
    trajectory = simulator.run(network_from_counts(network, counts), p.t_max, p.dt_write, p.dt_ode, rng, seed)
    logger.debug(f"轨迹完成: seed={seed}, ip3={ip3_mean}, {len(trajectory.times)} 个记录点")
    return trajectory
