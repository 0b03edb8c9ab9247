"""Finite-difference laboratory for wave operators on warped-product spacetimes.

The spacetime is a slab ``[t_min, t_max] x T^d`` with metric
``-beta(t) dt^2 + f(t)^2 dx^2``. Submodules:

* :mod:`wavelab.manifold`: spacetimes, grids, CFL validation
* :mod:`wavelab.causal`: rasterized causal and chronological futures/pasts
* :mod:`wavelab.sections`: grid sections and discrete distributions
* :mod:`wavelab.operators`: wave operators, symbols and adjoints
* :mod:`wavelab.cauchy`: the Cauchy problem and its demos
* :mod:`wavelab.green`: Green operators and fundamental solutions
* :mod:`wavelab.cli`: scenario runner and invariant suites
"""

from . import causal, cauchy, green, manifold, operators, sections
from .cauchy import CauchyData, Solution, solve
from .errors import (
    CFLError, ConfigError, DomainError, PaddingError, PreconditionError, ShapeError,
    UnsupportedOrderError, ValidationError, WavelabError,
)
from .green import fundamental_solution, green_apply, green_operator
from .manifold import Grid, SpacetimeSpec, SpatialManifold, TimeFunction, desitter_type, minkowski_cylinder
from .operators import WaveOperator, connection_dalembert, dalembert, formal_adjoint
from .sections import DiscreteDistribution, GridSection, delta, from_section, pair

__version__ = "0.1.0"

__all__ = [
    "causal", "cauchy", "green", "manifold", "operators", "sections",
    "CauchyData", "Solution", "solve",
    "CFLError", "ConfigError", "DomainError", "PaddingError", "PreconditionError", "ShapeError",
    "UnsupportedOrderError", "ValidationError", "WavelabError",
    "fundamental_solution", "green_apply", "green_operator",
    "Grid", "SpacetimeSpec", "SpatialManifold", "TimeFunction", "desitter_type", "minkowski_cylinder",
    "WaveOperator", "connection_dalembert", "dalembert", "formal_adjoint",
    "DiscreteDistribution", "GridSection", "delta", "from_section", "pair",
]
