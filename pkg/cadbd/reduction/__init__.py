#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
降阶模型：PPCA 最大似然估计与 TVR 求导
"""
from .pca import (
    FullParams,
    MomentState,
    ParameterSeries,
    StandardParams,
    estimate_series,
    latent_diagonal,
    log_likelihood,
    ml_estimate,
    ml_estimate_from_covariance,
    moments_from,
    split_standard_vector,
    standard_dim,
    to_full,
    to_standard,
    visible_from_dim,
)
from .tvr import TrainingPairs, TvrConfig, antidifferentiate, build_training_pairs, tvr_derivative, tvr_solve
