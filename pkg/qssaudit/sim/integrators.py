"""
One-step maps of the three models.

All steps are implicit trapezoidal in the differential part with the
algebraic (and, for QSS, fast) equations enforced at the new point; z_d is
held fixed within a step.
"""

import logging
from dataclasses import replace
from typing import Callable, Optional

import numpy as np

from ..dae.jacobian import fd_jacobian
from ..dae.model import DaeModel, as_model
from ..dae.state import PartitionedState
from ..exceptions import NewtonFailure, QssSingularity
from ..netmodel.network import AdmittanceMatrix
from ..netmodel.specs import SystemSpec
from ..solvers.newton import NewtonConfig, NewtonResult, NewtonStatus, newton_solve

logger = logging.getLogger(__name__)

Residual = Callable[[np.ndarray], np.ndarray]


def solve_step(residual: Residual, v0: np.ndarray, newton: NewtonConfig) -> NewtonResult:
    """Chord iteration first; a failed chord is retried with full Newton."""

    def jacobian(v: np.ndarray) -> np.ndarray:
        return fd_jacobian(residual, v)

    result = newton_solve(residual, jacobian, v0, newton)
    if (
        not result.converged
        and newton.reuse_jacobian
        and result.status is not NewtonStatus.SINGULAR_JACOBIAN
    ):
        logger.debug("Chord iteration failed (%s), retrying with full Newton", result.status.value)
        result = newton_solve(residual, jacobian, v0, replace(newton, reuse_jacobian=False))
    return result


def step_trapezoidal(
    target: "DaeModel | SystemSpec",
    state: PartitionedState,
    h: float,
    *,
    admittance: Optional[AdmittanceMatrix] = None,
    newton: Optional[NewtonConfig] = None,
) -> PartitionedState:
    """Complete-model step: trapezoidal (z_c, x) jointly with g = 0 at t + h."""
    model = as_model(target, state, admittance)
    newton = newton or NewtonConfig(reuse_jacobian=True)
    zd, layout = state.zd, model.layout
    f0 = model.f(state.zc, zd, state.x, state.y)
    hc0 = model.hc(state.zc, zd, state.x, state.y)
    half = 0.5 * h

    def residual(v: np.ndarray) -> np.ndarray:
        zc, x, y = layout.split(v)
        return np.concatenate([
            zc - state.zc - half * (model.hc(zc, zd, x, y) + hc0),
            x - state.x - half * (model.f(zc, zd, x, y) + f0),
            model.g(zc, zd, x, y),
        ])

    result = solve_step(residual, state.vector(), newton)
    if not result.converged:
        raise NewtonFailure(f"trapezoidal step at t={state.t:g} {result.describe()}", result)
    zc, x, y = layout.split(result.solution)
    return state.with_continuous(zc=zc, x=x, y=y, t=state.t + h)


def transient_step(
    target: "DaeModel | SystemSpec",
    state: PartitionedState,
    h: float,
    *,
    admittance: Optional[AdmittanceMatrix] = None,
    newton: Optional[NewtonConfig] = None,
) -> PartitionedState:
    """Transient-model step: z_c and z_d frozen, trapezoidal x with g = 0."""
    model = as_model(target, state, admittance)
    newton = newton or NewtonConfig(reuse_jacobian=True)
    zc, zd = state.zc, state.zd
    nx = len(state.x)
    f0 = model.f(zc, zd, state.x, state.y)
    half = 0.5 * h

    def residual(v: np.ndarray) -> np.ndarray:
        x, y = v[:nx], v[nx:]
        return np.concatenate([
            x - state.x - half * (model.f(zc, zd, x, y) + f0),
            model.g(zc, zd, x, y),
        ])

    result = solve_step(residual, np.concatenate([state.x, state.y]), newton)
    if not result.converged:
        raise NewtonFailure(f"transient step at t={state.t:g} {result.describe()}", result)
    v = result.solution
    return state.with_continuous(x=v[:nx], y=v[nx:], t=state.t + h)


def qss_step(
    target: "DaeModel | SystemSpec",
    state: PartitionedState,
    h: float,
    *,
    admittance: Optional[AdmittanceMatrix] = None,
    newton: Optional[NewtonConfig] = None,
) -> PartitionedState:
    """QSS step: trapezoidal z_c with f = 0 and g = 0 at t + h."""
    model = as_model(target, state, admittance)
    newton = newton or NewtonConfig(reuse_jacobian=True)
    zd, layout = state.zd, model.layout
    hc0 = model.hc(state.zc, zd, state.x, state.y)
    half = 0.5 * h

    def residual(v: np.ndarray) -> np.ndarray:
        zc, x, y = layout.split(v)
        return np.concatenate([
            zc - state.zc - half * (model.hc(zc, zd, x, y) + hc0),
            model.f(zc, zd, x, y),
            model.g(zc, zd, x, y),
        ])

    result = solve_step(residual, state.vector(), newton)
    if not result.converged:
        raise QssSingularity(
            f"QSS step at t={state.t:g} cannot follow the manifold: {result.describe()}",
            result,
        )
    zc, x, y = layout.split(result.solution)
    return state.with_continuous(zc=zc, x=x, y=y, t=state.t + h)
