#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
积分、观测量重构与评估统计
"""
from .figures import FigureKind, emit_figure_data
from .oscillations import OscillationRange, learned_range, oscillation_range, range_of_oscillations
from .rollout import (
    ObservableSeries,
    euler_rollout,
    minimum_covariance_eigenvalue,
    moment_term_decomposition,
    mse,
    nonnegative_fraction,
    reconstruct_observables,
)
