"""Truncated Dyson-Schwinger towers for zero-dimensional field theories.

Exact DS equations are generated symbolically, closed at finite order (by
zero, by an asymptotic growth law, or by exact values), and all solutions
of the resulting polynomial systems are found and compared against exact
Green's functions from contour integrals.
"""

from .asymptotics import (
    GrowthModel,
    default_growth_model,
    exact_sequence,
    fit_growth_model,
    growth_rate_analytic,
    richardson,
    richardson_rate,
)
from .d1 import D1LeadingResult, d1_leading_mass
from .errors import BracketError, ContractViolation, QuadratureError, ResourceLimitError
from .oracle import closed_form_reference, exact_greens
from .solver import RootSet, SolverConfig, roots_univariate, select_physical, solve_system, solve_truncation
from .tower import (
    DsTower,
    TheorySpec,
    TruncatedSystem,
    eliminate_univariate,
    generate_tower,
    get_theory,
    tower_for_order,
    truncate,
)

__version__ = "0.1.0"
