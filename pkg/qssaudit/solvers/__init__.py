"""Linear and nonlinear solvers, power flow and equilibrium initialisation."""

from .linear import LuFactorization, factorize, solve_linear
from .newton import NewtonConfig, NewtonResult, NewtonStatus, newton_solve
from .equilibrium import (
    InitialPoint,
    initialize_equilibrium,
    power_flow,
    project_to_manifold,
    solve_algebraic,
    solve_long_term_equilibrium,
)

__all__ = [
    "InitialPoint",
    "LuFactorization",
    "NewtonConfig",
    "NewtonResult",
    "NewtonStatus",
    "factorize",
    "initialize_equilibrium",
    "newton_solve",
    "power_flow",
    "project_to_manifold",
    "solve_algebraic",
    "solve_linear",
    "solve_long_term_equilibrium",
]
