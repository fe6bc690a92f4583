#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
基于反应基元的候选输入：矩闭合、参数换算与隐变量傅里叶参数
"""
from .fourier import LatentFourier, default_frequencies, fourier_latent
from .library import (
    CandidateStandardization,
    block_dimension,
    candidate_blocks,
    candidate_vector,
    fit_candidate_standardization,
)
from .moments import (
    GaussianParams,
    Moments,
    TrackedRates,
    closed_moment_rhs,
    gaussian_closure_third_moment,
    gaussian_moments,
    standard_to_gaussian,
)
from .motif import (
    MotifFactory,
    MotifKind,
    ReactionMotif,
    conserving_motifs,
    hidden_species_names,
    lotka_volterra_motifs,
    motifs_from_dict,
    motifs_to_dict,
)
from .transforms import ParamRates, StandardRates, observables_to_param_rhs, standard_to_param_rhs, to_standard_rhs
