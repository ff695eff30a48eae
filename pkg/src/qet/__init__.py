"""Numerical verification toolkit for von Neumann's quantum ergodic theorem.

Haar sampling of states and orthogonal decompositions, closed-form overlap
moments, exact tail integrals with their analytic bounds, exact time
averages of block weights under Schrodinger evolution, and a JSON-driven
experiment harness.
"""
__version__ = "0.1.0"

from .errors import QETError
from .haar import Decomposition, DimensionProfile
from .rng import SeedSpec

__all__ = ["__version__", "QETError", "Decomposition", "DimensionProfile", "SeedSpec"]
