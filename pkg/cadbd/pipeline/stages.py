#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
流水线各阶段

产物布局（相对输出根目录）：

    ensembles/<label>/traj_<seed>.csv, manifest.json   simulate
    transform/transform.json                           transform
    series/<label>.csv                                 estimate
    pairs/<label>.csv                                  derivative
    models/<mode>_seed<seed>.json, models/index.json   train
    rollouts/<model>/<label>.csv                       rollout
    tables/*.csv, figures/*.csv                        analyze
    report.json                                        report
"""
import json
import logging
import os
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd

from ..analysis.figures import FigureKind, emit_figure_data
from ..analysis.oscillations import learned_range, range_of_oscillations
from ..analysis.rollout import (
    euler_rollout,
    minimum_covariance_eigenvalue,
    moment_term_decomposition,
    mse,
    nonnegative_fraction,
    reconstruct_observables,
)
from ..candidates.motif import (
    ReactionMotif,
    conserving_motifs,
    hidden_species_names,
    lotka_volterra_motifs,
    motifs_from_dict,
)
from ..data.dataset import RECEPTOR_TOTAL, EnsembleDataset, StandardizingTransform, apply_transform, fit_transform
from ..errors import ConfigError, DomainError
from ..model.artifact_repository import manifest_repository
from ..reduction.pca import ParameterSeries, estimate_series
from ..reduction.tvr import TrainingPairs, TvrConfig, build_training_pairs
from ..simulation.dyk import CA_CYT, RECEPTOR_STATES, deterministic_range
from ..simulation.ensemble import simulate_ensemble
from ..subnet.checkpoint import load_checkpoint, save_checkpoint
from ..subnet.model import InputMode, SubnetSpec
from ..subnet.trainer import TrainingConfig, train_subnet
from .config import PipelineConfig
from .runner import STAGE_ORDER, StageContext, StageIO, register_stage

logger = logging.getLogger("pipeline")

ENSEMBLES = "ensembles"
TRANSFORM = "transform"
SERIES = "series"
PAIRS = "pairs"
MODELS = "models"
ROLLOUTS = "rollouts"
TABLES = "tables"
FIGURES = "figures"


def _condition_dataset(ctx: StageContext, value: float) -> EnsembleDataset:
    """读取一个条件的集合；可见物种含受体总数时追加该列"""
    ds = EnsembleDataset.load(ctx.path(ENSEMBLES, ctx.config.label(value)))
    if RECEPTOR_TOTAL in ctx.config.reduction.visible:
        ds = ds.with_receptor_total(RECEPTOR_STATES)
    return ds


def _ensemble_files(ctx: StageContext, values) -> List[str]:
    files: List[str] = []
    for value in values:
        files.extend(ctx.files_under(ENSEMBLES, ctx.config.label(value)))
    return files


def _load_transform(ctx: StageContext) -> Tuple[StandardizingTransform, str]:
    path = ctx.require(TRANSFORM, "transform.json")
    with open(path, "r", encoding="utf-8") as fh:
        return StandardizingTransform.from_json(fh.read()), path


def _series_path(ctx: StageContext, value: float) -> str:
    return ctx.path(SERIES, f"{ctx.config.label(value)}.csv")


def _load_series(ctx: StageContext, value: float) -> ParameterSeries:
    path = ctx.require(SERIES, f"{ctx.config.label(value)}.csv")
    return ParameterSeries.from_csv(path, ctx.config.reduction.visible, value)


def _model_species(cfg: PipelineConfig) -> List[str]:
    """基元引用的物种：可见物种在前，隐物种 X1..Xq 在后"""
    return list(cfg.reduction.visible) + hidden_species_names(cfg.reduction.latent_dim)


def build_motifs(cfg: PipelineConfig) -> List[ReactionMotif]:
    """按配置构造候选反应基元

    "lotka_volterra" 在全部非守恒物种上生成 Lotka-Volterra 基元；
    声明了守恒物种时再追加 A + R → R 基元。

    Raises:
        ConfigError: 基元声明非法
    """
    species = _model_species(cfg)
    conserved = cfg.candidates.conserved
    if conserved is not None and conserved not in cfg.reduction.visible:
        raise ConfigError("candidates.conserved", f"守恒物种必须是可见物种: {conserved}")
    try:
        if cfg.candidates.motifs == "lotka_volterra":
            motifs = [m for m in lotka_volterra_motifs(species) if conserved not in m.roles.values()]
            if conserved is not None:
                motifs.extend(conserving_motifs(species, conserved))
        elif isinstance(cfg.candidates.motifs, list):
            motifs = motifs_from_dict(cfg.candidates.motifs, species, conserved)
        else:
            raise ConfigError("candidates.motifs", f"未知的基元集合: {cfg.candidates.motifs}")
    except (KeyError, TypeError, DomainError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError("candidates.motifs", f"基元声明非法: {e}") from e
    if not motifs:
        raise ConfigError("candidates.motifs", "候选基元为空")
    return motifs


def _subnet_spec(cfg: PipelineConfig, mode: InputMode, n_motifs: int) -> SubnetSpec:
    kwargs = {}
    if cfg.candidates.frequencies is not None:
        kwargs["frequencies"] = tuple(float(f) for f in cfg.candidates.frequencies)
    return SubnetSpec(
        n_visible=len(cfg.reduction.visible),
        latent_dim=cfg.reduction.latent_dim,
        widths=cfg.subnet.widths,
        dropout_rate=cfg.subnet.dropout_rate,
        weight_cutoff=cfg.subnet.weight_cutoff,
        input_mode=mode,
        n_motifs=n_motifs if mode == InputMode.CANDIDATES else 0,
        **kwargs,
    )


def _model_index(ctx: StageContext) -> Tuple[List[Dict], str]:
    path = ctx.require(MODELS, "index.json")
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh), path


@register_stage("simulate")
def simulate_stage(ctx: StageContext) -> StageIO:
    """每个条件 M 条轨迹，种子 base_seed .. base_seed+M−1（各条件相同）"""
    cfg = ctx.config
    outputs: List[str] = []
    for value in cfg.conditions.all_values():
        params, ip3 = cfg.params_for(value)
        label = cfg.label(value)
        ds = simulate_ensemble(params, ip3, cfg.ensemble.trajectories, cfg.ensemble.base_seed, ctx.jobs, label=value)
        metadata = {
            "condition": label,
            "axis": cfg.conditions.axis,
            "ip3": ip3,
            "n_ip3r": params.n_ip3r,
            "params_hash": params.params_hash(),
        }
        outputs.extend(ds.save(ctx.path(ENSEMBLES, label), metadata))
    return [], outputs


@register_stage("transform")
def transform_stage(ctx: StageContext) -> StageIO:
    """在边界条件上拟合可见物种的标准化变换"""
    cfg = ctx.config
    values = cfg.conditions.transform_values()
    datasets = [_condition_dataset(ctx, v) for v in values]
    transform = fit_transform(datasets, cfg.reduction.visible, cfg.reduction.window)
    path = ctx.path(TRANSFORM, "transform.json")
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(transform.to_json())
    logger.info(f"标准化变换已写入 {ctx.rel(path)}: 边界条件 {[cfg.label(v) for v in values]}")
    return _ensemble_files(ctx, values), [path]


@register_stage("estimate")
def estimate_stage(ctx: StageContext) -> StageIO:
    """每个条件、每个时间点的 ML 标准参数"""
    cfg = ctx.config
    transform, transform_path = _load_transform(ctx)
    os.makedirs(ctx.path(SERIES), exist_ok=True)
    values = cfg.conditions.all_values()
    outputs = []
    for value in values:
        ds = _condition_dataset(ctx, value).window(*cfg.reduction.window).with_visible(cfg.reduction.visible)
        ds = apply_transform(ds, transform)
        series = estimate_series(ds, cfg.reduction.latent_dim, cfg.reduction.variance_floor)
        path = _series_path(ctx, value)
        series.to_csv(path)
        outputs.append(path)
    return _ensemble_files(ctx, values) + [transform_path], outputs


@register_stage("derivative")
def derivative_stage(ctx: StageContext) -> StageIO:
    """TVR 求导，生成训练对"""
    cfg = ctx.config
    tvr = TvrConfig(alpha=cfg.tvr.alpha, iterations=cfg.tvr.iterations, dt=cfg.dyk.dt_write,
                    small_threshold=cfg.tvr.small_threshold)
    os.makedirs(ctx.path(PAIRS), exist_ok=True)
    inputs, outputs = [], []
    for value in cfg.conditions.all_values():
        series = _load_series(ctx, value)
        pairs = build_training_pairs(series, tvr)
        path = ctx.path(PAIRS, f"{cfg.label(value)}.csv")
        pairs.to_csv(path, series.columns())
        inputs.append(_series_path(ctx, value))
        outputs.append(path)
    return inputs, outputs


@register_stage("train")
def train_stage(ctx: StageContext) -> StageIO:
    """每个 (输入模式, 优化种子) 训练一个模型，训练条件合并，验证条件只做评估"""
    cfg = ctx.config
    q = cfg.reduction.latent_dim

    def load_pairs(values) -> Tuple[List[TrainingPairs], List[str]]:
        paths = [ctx.require(PAIRS, f"{cfg.label(v)}.csv") for v in values]
        return [TrainingPairs.from_csv(p, q, v) for p, v in zip(paths, values)], paths

    train_pairs, train_paths = load_pairs(cfg.conditions.training)
    validation_pairs, validation_paths = load_pairs(cfg.conditions.validation)
    motifs = build_motifs(cfg)
    species = _model_species(cfg)
    os.makedirs(ctx.path(MODELS), exist_ok=True)

    index, outputs = [], []
    for mode_name in cfg.training.modes:
        mode = InputMode(mode_name)
        spec = _subnet_spec(cfg, mode, len(motifs))
        for seed in cfg.training.seeds:
            training = TrainingConfig(rounds=cfg.training.rounds, batch_size=cfg.training.batch_size,
                                      learning_rate=cfg.training.learning_rate, seed=seed)
            model, history = train_subnet(train_pairs, spec, motifs, training, validation_pairs or None)
            name = f"{mode.value}_seed{seed}"
            path = ctx.path(MODELS, f"{name}.json")
            save_checkpoint(model, path, species, cfg.candidates.conserved,
                            extra={"history": history.to_dict(), "mode": mode.value, "seed": seed})
            index.append({"name": name, "mode": mode.value, "seed": seed, "file": f"{name}.json"})
            outputs.append(path)

    index_path = ctx.path(MODELS, "index.json")
    with open(index_path, "w", encoding="utf-8") as fh:
        json.dump(index, fh, indent=2, sort_keys=True)
    return train_paths + validation_paths, outputs + [index_path]


@register_stage("rollout")
def rollout_stage(ctx: StageContext) -> StageIO:
    """每个模型从 θ̂_ML(t0) 出发，对训练与验证条件做欧拉积分"""
    cfg = ctx.config
    index, index_path = _model_index(ctx)
    values = list(cfg.conditions.training) + [v for v in cfg.conditions.validation
                                              if v not in cfg.conditions.training]
    inputs = [index_path] + [_series_path(ctx, v) for v in values]
    outputs = []
    for entry in index:
        model_path = ctx.require(MODELS, entry["file"])
        model = load_checkpoint(model_path)
        inputs.append(model_path)
        os.makedirs(ctx.path(ROLLOUTS, entry["name"]), exist_ok=True)
        for value in values:
            reference = _load_series(ctx, value)
            series = euler_rollout(model, reference.matrix[0], float(reference.times[0]), float(reference.times[-1]),
                                   cfg.rollout_dt, reference.q, reference.species, value)
            path = ctx.path(ROLLOUTS, entry["name"], f"{cfg.label(value)}.csv")
            series.to_csv(path)
            outputs.append(path)
    return inputs, outputs


def _rollout_series(ctx: StageContext, name: str, value: float) -> ParameterSeries:
    path = ctx.require(ROLLOUTS, name, f"{ctx.config.label(value)}.csv")
    return ParameterSeries.from_csv(path, ctx.config.reduction.visible, value)


@register_stage("analyze")
def analyze_stage(ctx: StageContext) -> StageIO:
    """误差、振荡范围、诊断量与图表数据"""
    cfg = ctx.config
    an = cfg.analysis
    visible = list(cfg.reduction.visible)
    index, index_path = _model_index(ctx)
    transform, transform_path = _load_transform(ctx)
    transform = transform.restrict(visible)
    scale = cfg.dyk.particles_per_micromolar
    split = {v: "training" for v in cfg.conditions.training}
    for v in cfg.conditions.validation:
        split.setdefault(v, "validation")
    all_values = cfg.conditions.all_values()

    inputs = [index_path, transform_path] + [_series_path(ctx, v) for v in all_values]
    inputs += _ensemble_files(ctx, all_values)
    outputs: List[str] = []
    os.makedirs(ctx.path(TABLES), exist_ok=True)

    references = {v: _load_series(ctx, v) for v in all_values}
    records, diagnostics = [], []
    rollouts: Dict[str, Dict[float, ParameterSeries]] = {}
    learned_rows = []
    for entry in index:
        name = entry["name"]
        rollouts[name] = {}
        for value in split:
            series = _rollout_series(ctx, name, value)
            inputs.append(ctx.path(ROLLOUTS, name, f"{cfg.label(value)}.csv"))
            rollouts[name][value] = series
            records.append({"label": value, "split": split[value], "mode": entry["mode"], "seed": entry["seed"],
                            "mse": mse(series, references[value])})
            observables = reconstruct_observables(series, transform)
            eigen = minimum_covariance_eigenvalue(observables)
            for _, row in nonnegative_fraction(observables).iterrows():
                diagnostics.append({"model": name, "label": value, "species": row["species"],
                                    "nonnegative_fraction": row["nonnegative_fraction"],
                                    "min_cov_eigenvalue": float(np.min(eigen))})
            if an.species in visible:
                i = visible.index(an.species)
                window = min(an.window, float(series.times[-1] - series.times[0]))
                bounds = learned_range(observables.mean[:, i], observables.cov[:, i, i], observables.times,
                                       window, scale)
                learned_rows.append({"label": value, **bounds, "source": f"learned_{name}"})

    diagnostics_path = ctx.path(TABLES, "diagnostics.csv")
    pd.DataFrame(diagnostics).to_csv(diagnostics_path, index=False)
    outputs.append(diagnostics_path)
    outputs += emit_figure_data(FigureKind.MSE_CURVES, {"records": records}, ctx.path(FIGURES))

    ranges = {"stochastic": range_of_oscillations(
        {v: _condition_dataset(ctx, v) for v in all_values}, an.species, an.window, scale, an.bootstrap,
        seed=cfg.ensemble.base_seed)}
    if an.deterministic and cfg.conditions.axis == "ip3" and an.species == CA_CYT:
        frame = deterministic_range(cfg.dyk, sorted(all_values), an.deterministic_horizon, cfg.dyk.dt_ode, an.window)
        ranges["deterministic"] = frame.rename(
            columns={"ip3": "label", "ca_min": "c_minus_min", "ca_max": "c_plus_max"})
    for source in sorted({row["source"] for row in learned_rows}):
        rows = [{k: v for k, v in row.items() if k != "source"} for row in learned_rows if row["source"] == source]
        ranges[source] = pd.DataFrame(rows)
    outputs += emit_figure_data(FigureKind.RANGE_DIAGRAM, ranges, ctx.path(FIGURES))

    slices = {"ml": references}
    slices.update({f"rollout_{name}": by_label for name, by_label in rollouts.items()})
    outputs += emit_figure_data(FigureKind.PARAMETER_SLICES, slices, ctx.path(FIGURES))

    candidate_models = [e for e in index if e["mode"] == InputMode.CANDIDATES.value]
    if candidate_models:
        entry = candidate_models[0]
        model = load_checkpoint(ctx.require(MODELS, entry["file"]))
        term_species = an.term_species or an.species
        if term_species not in visible:
            raise ConfigError("analysis.term_species", f"分解物种必须是可见物种: {term_species}")
        i = visible.index(term_species)
        terms = {v: moment_term_decomposition(model, references[v], i) for v in split}
        outputs += emit_figure_data(FigureKind.TERM_DECOMPOSITION, {"species": term_species, "terms": terms},
                                    ctx.path(FIGURES))
    return inputs, outputs


@register_stage("report")
def report_stage(ctx: StageContext) -> StageIO:
    """汇总各阶段清单，把输入与输出串联起来"""
    repository = manifest_repository(ctx.store)
    stages, inputs = [], []
    for name in STAGE_ORDER:
        if name == "report" or not repository.exists(name):
            continue
        run = repository.get(name)
        stages.append(run.to_dict())
        inputs.append(repository.path_for(name))
    if not stages:
        raise DomainError("没有可汇总的阶段清单")
    document = {
        "config_hash": ctx.config.config_hash,
        "config": os.path.basename(ctx.config.path) if ctx.config.path else None,
        "stages": stages,
    }
    ctx.store.set("report", document)
    return inputs, [ctx.store.path_for("report")]
