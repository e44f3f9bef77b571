"""Quadratic-program safety filters with feasible-set reshaping.

The building blocks are importable from their modules:

``barrier``    shaping functions and safety distances
``qp``         dense active-set solver and brute-force oracle
``pbasis``     positive bases and their validation
``filters``    conventional, relaxed and reshaped filters
``actuation``  linear velocity-tracking dynamics
``sim``        closed-loop simulation and static sweeps
``analysis``   small-gain and Lipschitz diagnostics
``fileio``     JSON configs, CSV/JSON artifacts
"""

from .barrier import BarrierSpec
from .filters import FilterConfig, OffsetForm, Variant, filter_velocity
from .pbasis import PositiveBasis, polygon_basis, validate_basis
from .qp import QpProblem, solve

__version__ = "0.1.0"

__all__ = [
    "BarrierSpec",
    "FilterConfig",
    "OffsetForm",
    "PositiveBasis",
    "QpProblem",
    "Variant",
    "filter_velocity",
    "polygon_basis",
    "solve",
    "validate_basis",
]
