#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
集合模拟

成员轨迹相互独立，可由进程池并行执行；结果始终按种子排序，
并行度不影响输出。
"""
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

from ..data.dataset import EnsembleDataset
from ..errors import DomainError, EnsembleFault
from ..model.dyk_params import DykParams
from ..model.reaction import ReactionNetwork, network_from_counts
from .ssa import HybridSimulator, simulate_trajectory
from .trajectory import Trajectory

logger = logging.getLogger("ensemble")


@dataclass(frozen=True)
class DykTrajectoryTask:
    """DYK 模型的单轨迹任务（可跨进程序列化）"""
    params: DykParams
    ip3_mean: float

    def __call__(self, seed: int) -> Trajectory:
        return simulate_trajectory(self.params, self.ip3_mean, seed)


@dataclass(frozen=True)
class NetworkTrajectoryTask:
    """任意网络、无电流的单轨迹任务"""
    network: ReactionNetwork
    init_counts: Dict[str, int]
    t_max: float
    dt_write: float
    dt_ode: float

    def __call__(self, seed: int) -> Trajectory:
        simulator = HybridSimulator(self.network)
        start = network_from_counts(self.network, self.init_counts)
        return simulator.run(start, self.t_max, self.dt_write, self.dt_ode, seed, seed)


def default_jobs() -> int:
    """默认并行度，取自环境变量 CADBD_JOBS"""
    try:
        return max(1, int(os.getenv("CADBD_JOBS", "1")))
    except ValueError:
        logger.warning("CADBD_JOBS 不是整数，使用 1")
        return 1


def run_ensemble(task: Callable[[int], Trajectory], seeds: Sequence[int], jobs: Optional[int] = None) -> List[Trajectory]:
    """按种子顺序运行全部成员

    Raises:
        EnsembleFault: 任一成员失败，携带失败的种子
    """
    seeds = [int(s) for s in seeds]
    jobs = default_jobs() if jobs is None else max(1, int(jobs))
    results: List[Trajectory] = []
    if jobs == 1 or len(seeds) == 1:
        for seed in seeds:
            try:
                results.append(task(seed))
            except Exception as e:
                logger.error(f"种子 {seed} 的轨迹失败: {e}")
                raise EnsembleFault(seed, e) from e
        return results

    with ProcessPoolExecutor(max_workers=jobs) as executor:
        futures = [executor.submit(task, seed) for seed in seeds]
        for seed, future in zip(seeds, futures):
            try:
                results.append(future.result())
            except Exception as e:
                logger.error(f"种子 {seed} 的轨迹失败: {e}")
                for pending in futures:
                    pending.cancel()
                raise EnsembleFault(seed, e) from e
    return results


def simulate_ensemble(p: DykParams, ip3_mean: float, m: int, base_seed: int,
                      jobs: Optional[int] = None, label: Optional[float] = None) -> EnsembleDataset:
    """M 条轨迹，种子 base_seed .. base_seed+M−1"""
    if m < 1:
        raise DomainError(f"轨迹数必须 >= 1: {m}")
    seeds = range(base_seed, base_seed + m)
    logger.info(f"开始集合模拟: ip3={ip3_mean}, n_ip3r={p.n_ip3r}, M={m}, base_seed={base_seed}")
    trajectories = run_ensemble(DykTrajectoryTask(p, float(ip3_mean)), seeds, jobs)
    return EnsembleDataset.from_trajectories(trajectories, label=ip3_mean if label is None else label)


def simulate_network_ensemble(network: ReactionNetwork, init_counts: Dict[str, int], t_max: float,
                              dt_write: float, dt_ode: float, m: int, base_seed: int,
                              jobs: Optional[int] = None) -> EnsembleDataset:
    """任意网络的集合模拟（无电流）"""
    if m < 1:
        raise DomainError(f"轨迹数必须 >= 1: {m}")
    task = NetworkTrajectoryTask(network, dict(init_counts), t_max, dt_write, dt_ode)
    return EnsembleDataset.from_trajectories(run_ensemble(task, range(base_seed, base_seed + m), jobs))
