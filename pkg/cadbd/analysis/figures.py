#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
图表数据导出

只输出 CSV 表，不做绘图。各种类的表头：

    RangeDiagram       range_diagram.csv      label, source, c_minus_min, c_plus_max,
                                              c_minus_lo, c_minus_hi, c_plus_lo, c_plus_hi
    ParameterSlices    parameter_slices.csv   label, source, t, <参数列>
    MseCurves          mse_curves.csv         label, split, mode, seed, mse
    TermDecomposition  term_decomposition.csv label, species, t, term_b, term_W, term_sigma2,
                                              term_mu_h, term_Sigma_h, total
"""
import logging
import os
from enum import Enum
from typing import Any, Callable, Dict, List, Mapping

import pandas as pd

from ..errors import DomainError
from ..reduction.pca import ParameterSeries

logger = logging.getLogger("figures")


class FigureKind(str, Enum):
    """图表数据种类"""
    RANGE_DIAGRAM = "RangeDiagram"
    PARAMETER_SLICES = "ParameterSlices"
    MSE_CURVES = "MseCurves"
    TERM_DECOMPOSITION = "TermDecomposition"


RANGE_COLUMNS = ["label", "source", "c_minus_min", "c_plus_max", "c_minus_lo", "c_minus_hi", "c_plus_lo", "c_plus_hi"]
MSE_COLUMNS = ["label", "split", "mode", "seed", "mse"]
TERM_COLUMNS = ["label", "species", "t", "term_b", "term_W", "term_sigma2", "term_mu_h", "term_Sigma_h", "total"]

FILE_NAMES = {
    FigureKind.RANGE_DIAGRAM: "range_diagram.csv",
    FigureKind.PARAMETER_SLICES: "parameter_slices.csv",
    FigureKind.MSE_CURVES: "mse_curves.csv",
    FigureKind.TERM_DECOMPOSITION: "term_decomposition.csv",
}


def _range_table(inputs: Mapping[str, Any]) -> pd.DataFrame:
    """inputs: source 名 -> 振荡范围表（缺少的置信区间列填空）"""
    frames = []
    for source, frame in inputs.items():
        frame = frame.copy()
        frame.insert(1, "source", source)
        frames.append(frame.reindex(columns=RANGE_COLUMNS))
    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=RANGE_COLUMNS)


def _slice_table(inputs: Mapping[str, Mapping[float, ParameterSeries]]) -> pd.DataFrame:
    """inputs: source 名（如 ml / rollout）-> {label: 参数序列}"""
    frames = []
    for source, by_label in inputs.items():
        for label, series in sorted(by_label.items()):
            frame = series.to_frame()
            frame.insert(0, "source", source)
            frame.insert(0, "label", label)
            frames.append(frame)
    if not frames:
        raise DomainError("ParameterSlices 需要至少一个参数序列")
    return pd.concat(frames, ignore_index=True)


def _mse_table(inputs: Mapping[str, Any]) -> pd.DataFrame:
    """inputs: {"records": [{label, split, mode, seed, mse}, ...]}"""
    return pd.DataFrame(list(inputs.get("records", [])), columns=MSE_COLUMNS)


def _term_table(inputs: Mapping[str, Any]) -> pd.DataFrame:
    """inputs: {"species": 物种名, "terms": {label: 分解表}}"""
    frames = []
    for label, frame in sorted(inputs.get("terms", {}).items()):
        frame = frame.copy()
        frame.insert(0, "species", inputs.get("species", ""))
        frame.insert(0, "label", label)
        frames.append(frame.reindex(columns=TERM_COLUMNS))
    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=TERM_COLUMNS)


TABLE_BUILDERS: Dict[FigureKind, Callable[[Mapping[str, Any]], pd.DataFrame]] = {
    FigureKind.RANGE_DIAGRAM: _range_table,
    FigureKind.PARAMETER_SLICES: _slice_table,
    FigureKind.MSE_CURVES: _mse_table,
    FigureKind.TERM_DECOMPOSITION: _term_table,
}


def emit_figure_data(kind: str, inputs: Mapping[str, Any], directory: str) -> List[str]:
    """写出一种图表的 CSV 数据

    Args:
        kind: 图表种类名
        inputs: 该种类所需的输入（见模块说明）
        directory: 输出目录

    Returns:
        写入的文件路径

    Raises:
        DomainError: 未知的图表种类
    """
    try:
        kind = FigureKind(kind)
    except ValueError:
        raise DomainError(f"未知的图表种类: {kind}")
    table = TABLE_BUILDERS[kind](inputs)
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, FILE_NAMES[kind])
    table.to_csv(path, index=False)
    logger.info(f"图表数据 {kind.value} 已写入 {path} ({len(table)} 行)")
    return [path]
