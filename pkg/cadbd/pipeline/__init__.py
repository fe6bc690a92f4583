#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
配置驱动的阶段流水线
"""
from .config import PipelineConfig, condition_label, config_from_dict, load_config
from .runner import STAGE_ORDER, StageContext, StageRunner, create_runner, register_stage
