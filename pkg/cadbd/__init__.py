#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
钙振荡的随机模拟、降阶建模与神经矩方程学习
"""

__version__ = "0.1.0"
