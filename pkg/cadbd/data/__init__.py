#!/usr/bin/env python
# -*- coding: utf-8 -*-

from .dataset import EnsembleDataset, StandardizingTransform, apply_transform, fit_transform, invert_transform

__all__ = ["EnsembleDataset", "StandardizingTransform", "apply_transform", "fit_transform", "invert_transform"]
