#!/usr/bin/env python
# -*- coding: utf-8 -*-

from .reaction import Compartment, Species, Reaction, ReactionNetwork
from .dyk_params import AVOGADRO, DykParams
from .stage_run import StageRun, StageStatus
from .artifact_repository import ArtifactRepository, manifest_repository

__all__ = [
    "Compartment", "Species", "Reaction", "ReactionNetwork",
    "AVOGADRO", "DykParams",
    "StageRun", "StageStatus",
    "ArtifactRepository", "manifest_repository",
]
