"""Seed-tree inference for uniform-attachment random trees."""

from seedtrace.kernels import BACKEND
from seedtrace.tree_model import GrowthTree, RngStream, grow, path, star

__version__ = "0.1.0"

__all__ = ["BACKEND", "GrowthTree", "RngStream", "grow", "path", "star", "__version__"]
