#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
dθ̂/dt 的神经网络模型、训练与检查点
"""
from .checkpoint import CHECKPOINT_VERSION, checkpoint_from_dict, checkpoint_to_dict, load_checkpoint, save_checkpoint
from .model import InputMode, SubnetModel, SubnetSpec
from .trainer import PooledPairs, SubnetTrainer, TrainingConfig, TrainingHistory, pool_pairs, train_subnet
