"""Physical models exposed as affine generators of a real state vector."""

from .base import LiouvillianModel
from .redfield import HeatModel, HeatModelParams
from .vsystem import VModelParams, VSystemModel

__all__ = ["LiouvillianModel", "HeatModel", "HeatModelParams", "VModelParams", "VSystemModel"]
