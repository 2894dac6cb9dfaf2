"""
Eigenvalues of reduced Jacobians and membership in the stable part of the
constraint manifold (Γ_s).
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from ..config import config
from ..exceptions import NotOnManifold, SingularAlgebraic, SpectrumError
from ..netmodel.network import AdmittanceMatrix
from ..netmodel.specs import SystemSpec
from .jacobian import (
    condition_estimate,
    jacobian_blocks,
    reduced_fast_jacobian,
    reduced_slow_jacobian,
)
from .model import DaeModel, as_model
from .state import PartitionedState

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: Tuple[complex, ...]
    max_real_part: float
    g_y_condition_estimate: float = math.nan

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
            "max_real_part": self.max_real_part,
            "g_y_condition_estimate": self.g_y_condition_estimate,
        }


class GammaS(str, Enum):
    IN_GAMMA_S = "InGammaS"
    UNSTABLE_FAST = "UnstableFast"
    SINGULAR_ALGEBRAIC = "SingularAlgebraic"


@dataclass(frozen=True)
class GammaSResult:
    status: GammaS
    max_real_part: float = math.nan
    spectrum: Optional[SpectrumResult] = None
    condition: float = math.nan

    @property
    def inside(self) -> bool:
        return self.status is GammaS.IN_GAMMA_S

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "max_real_part": self.max_real_part,
            "g_y_condition_estimate": self.condition,
            "eigenvalues": (
                self.spectrum.to_dict()["eigenvalues"] if self.spectrum else []
            ),
        }


def eigenvalues(M, g_y_condition_estimate: float = math.nan) -> SpectrumResult:
    """All eigenvalues of a dense real matrix, sorted by (real, imag)."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"eigenvalues need a square matrix, got shape {M.shape}")
    if M.size == 0:
        return SpectrumResult((), -math.inf, g_y_condition_estimate)
    try:
        lam = scipy.linalg.eigvals(M)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise SpectrumError(f"eigenvalue computation failed: {e}") from e
    lam = lam[np.lexsort((lam.imag, lam.real))]
    return SpectrumResult(
        eigenvalues=tuple(complex(z) for z in lam),
        max_real_part=float(np.max(lam.real)),
        g_y_condition_estimate=g_y_condition_estimate,
    )


def gamma_s_membership(
    target: "DaeModel | SystemSpec",
    state: PartitionedState,
    admittance: Optional[AdmittanceMatrix] = None,
    *,
    manifold_tol: float = config.MANIFOLD_TOL,
    margin: float = config.STABILITY_MARGIN,
    condition_limit: float = config.CONDITION_LIMIT,
) -> GammaSResult:
    """InGammaS iff g_y is nonsingular and the reduced fast Jacobian is Hurwitz."""
    model = as_model(target, state, admittance)
    residual = model.manifold_residual(state)
    if not residual <= manifold_tol:
        raise NotOnManifold(
            f"state at t={state.t:g} is off the constraint manifold "
            f"(max(|f|, |g|) = {residual:.3e} > {manifold_tol:g})"
        )

    blocks = jacobian_blocks(model, state)
    cond = condition_estimate(blocks.g_y)
    try:
        reduced = reduced_fast_jacobian(blocks, condition_limit)
    except SingularAlgebraic:
        return GammaSResult(GammaS.SINGULAR_ALGEBRAIC, condition=cond)

    spectrum = eigenvalues(reduced, cond)
    status = GammaS.IN_GAMMA_S if spectrum.max_real_part < -margin else GammaS.UNSTABLE_FAST
    logger.debug(
        "Γ_s test at t=%.4f: %s (max Re λ = %.4e)", state.t, status.value, spectrum.max_real_part
    )
    return GammaSResult(status, spectrum.max_real_part, spectrum, cond)


def slow_spectrum(
    target: "DaeModel | SystemSpec",
    state: PartitionedState,
    admittance: Optional[AdmittanceMatrix] = None,
    *,
    condition_limit: float = config.CONDITION_LIMIT,
) -> SpectrumResult:
    """Eigenvalues of the linearised QSS slow dynamics at a manifold point.

    Raises SingularAlgebraic when the fast subsystem Jacobian is singular.
    """
    model = as_model(target, state, admittance)
    blocks = jacobian_blocks(model, state)
    reduced = reduced_slow_jacobian(blocks, condition_limit)
    return eigenvalues(reduced, condition_estimate(blocks.g_y))
