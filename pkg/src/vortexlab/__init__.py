"""Numerical laboratory for the epsilon-scaled abelian vortex equations.

The package discretizes the first-order system coupling a twisted
Cauchy-Riemann equation with a curvature/moment-map equation for linear
circle actions on C^n, over flat twisted tori and the radially symmetric
plane, and provides solvers plus the diagnostic suite built on top of them.
"""

from .geometry import MomentModel, TopologyInfo
from .grids import TorusGrid, RadialDomain
from .fields import FieldState, Tangent, CoTriple, GaugeTransform

__all__ = [
    "MomentModel",
    "TopologyInfo",
    "TorusGrid",
    "RadialDomain",
    "FieldState",
    "Tangent",
    "CoTriple",
    "GaugeTransform",
]

__version__ = "0.1.0"
