"""
Damped Newton iteration.

Failures are reported through NewtonResult.status; nothing is raised.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from ..config import config
from ..exceptions import SingularMatrix, SpecError
from .linear import LuFactorization, factorize

logger = logging.getLogger(__name__)

DIVERGENCE_GROWTH = 1e6


class NewtonStatus(str, Enum):
    CONVERGED = "Converged"
    MAX_ITER_EXCEEDED = "MaxIterExceeded"
    SINGULAR_JACOBIAN = "SingularJacobian"
    DIVERGED = "Diverged"


@dataclass(frozen=True)
class NewtonConfig:
    tol_inf: float = config.NEWTON_TOL
    max_iter: int = config.NEWTON_MAX_ITER
    # Maximum number of step halvings; None disables damping
    damping: Optional[int] = 8
    # Chord variant: factorise the Jacobian at the starting point only
    reuse_jacobian: bool = False

    def __post_init__(self):
        if not self.tol_inf > 0:
            raise SpecError("Newton tolerance must be positive", field="NewtonConfig.tol_inf")
        if self.max_iter < 1:
            raise SpecError("max_iter must be at least 1", field="NewtonConfig.max_iter")
        if self.damping is not None and self.damping < 0:
            raise SpecError("damping must be >= 0", field="NewtonConfig.damping")


@dataclass(frozen=True, eq=False)
class NewtonResult:
    status: NewtonStatus
    solution: np.ndarray
    final_residual_norm: float
    iterations: int = 0
    condition_estimate: float = math.nan
    # Residual norm relative to the starting one
    growth: float = 1.0

    @property
    def converged(self) -> bool:
        return self.status is NewtonStatus.CONVERGED

    def describe(self) -> str:
        return (
            f"{self.status.value} after {self.iterations} iterations "
            f"(|r| = {self.final_residual_norm:.3e}, cond = {self.condition_estimate:.3e})"
        )


def _norm(r: np.ndarray) -> float:
    if not len(r):
        return 0.0
    value = float(np.max(np.abs(r)))
    return value if math.isfinite(value) else math.inf


def newton_solve(
    residual: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], np.ndarray],
    x0,
    cfg: Optional[NewtonConfig] = None,
) -> NewtonResult:
    """
    Newton iteration with step halving on the residual ∞-norm.

    The Jacobian is factorised at the starting point before the
    convergence test, so a singular starting Jacobian is always reported.
    A Jacobian that turns singular at a later iterate ends the solve with
    SINGULAR_JACOBIAN and an infinite condition estimate.
    """
    cfg = cfg or NewtonConfig()
    x = np.array(x0, dtype=float).reshape(-1)
    r = np.asarray(residual(x), dtype=float)
    norm = start = _norm(r)
    fact: Optional[LuFactorization] = None
    iterations = 0

    def result(status: NewtonStatus) -> NewtonResult:
        cond = fact.condition if fact is not None else math.inf
        growth = norm / start if start > 0 else (0.0 if norm == 0 else math.inf)
        logger.debug("Newton %s after %d iterations, |r| = %.3e", status.value, iterations, norm)
        return NewtonResult(status, x, norm, iterations, cond, growth)

    while True:
        if fact is None or not cfg.reuse_jacobian:
            try:
                fact = factorize(jacobian(x))
            except SingularMatrix:
                fact = None
                return result(NewtonStatus.SINGULAR_JACOBIAN)

        if norm <= cfg.tol_inf:
            return result(NewtonStatus.CONVERGED)
        if not math.isfinite(norm) or (start > 0 and norm > DIVERGENCE_GROWTH * start):
            return result(NewtonStatus.DIVERGED)
        if iterations >= cfg.max_iter:
            return result(NewtonStatus.MAX_ITER_EXCEEDED)

        dx = fact.solve(-r)
        iterations += 1
        scale = 1.0
        for _ in range((cfg.damping or 0) + 1):
            x_try = x + scale * dx
            r_try = np.asarray(residual(x_try), dtype=float)
            norm_try = _norm(r_try)
            if cfg.damping is None or norm_try < norm:
                break
            scale *= 0.5
        # Without a decrease the most damped step is taken anyway
        x, r, norm = x_try, r_try, norm_try
