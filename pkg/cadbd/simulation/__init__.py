#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
随机与确定性模拟

子模块: dyk（反应模型与确定性参考）, ssa（混合直接法）, ensemble（集合）, trajectory
"""
