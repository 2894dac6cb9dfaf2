"""
Finite-difference Jacobian blocks and the reduced Jacobians built from them.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from ..config import config
from ..exceptions import SingularAlgebraic
from ..netmodel.network import AdmittanceMatrix
from ..netmodel.specs import SystemSpec
from .model import DaeModel, as_model
from .state import PartitionedState

FD_STEP = 1e-7


def fd_jacobian(
    fun: Callable[[np.ndarray], np.ndarray],
    v: np.ndarray,
    f0: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Forward differences with per-variable step max(1e-7, 1e-7 |v_i|)."""
    v = np.asarray(v, dtype=float)
    if f0 is None:
        f0 = np.asarray(fun(v), dtype=float)
    J = np.empty((len(f0), len(v)))
    for i in range(len(v)):
        vp = v.copy()
        vp[i] += max(FD_STEP, FD_STEP * abs(v[i]))
        J[:, i] = (np.asarray(fun(vp)) - f0) / (vp[i] - v[i])
    return J


@dataclass(frozen=True, eq=False)
class JacobianBlocks:
    f_zc: np.ndarray
    f_x: np.ndarray
    f_y: np.ndarray
    g_zc: np.ndarray
    g_x: np.ndarray
    g_y: np.ndarray
    h_zc: np.ndarray
    h_x: np.ndarray
    h_y: np.ndarray
    evaluated_at: PartitionedState


def jacobian_blocks(
    target: "DaeModel | SystemSpec",
    state: PartitionedState,
    admittance: Optional[AdmittanceMatrix] = None,
) -> JacobianBlocks:
    model = as_model(target, state, admittance)
    layout = model.layout
    zd = state.zd

    def stacked(v: np.ndarray) -> np.ndarray:
        zc, x, y = layout.split(v)
        return np.concatenate(
            [model.f(zc, zd, x, y), model.g(zc, zd, x, y), model.hc(zc, zd, x, y)]
        )

    J = fd_jacobian(stacked, state.vector())
    nzc, nx, ny = layout.n_zc, layout.n_x, layout.n_y
    rows = (slice(0, nx), slice(nx, nx + ny), slice(nx + ny, nx + ny + nzc))
    cols = (slice(0, nzc), slice(nzc, nzc + nx), slice(nzc + nx, nzc + nx + ny))
    f, g, h = (J[r] for r in rows)
    return JacobianBlocks(
        f_zc=f[:, cols[0]], f_x=f[:, cols[1]], f_y=f[:, cols[2]],
        g_zc=g[:, cols[0]], g_x=g[:, cols[1]], g_y=g[:, cols[2]],
        h_zc=h[:, cols[0]], h_x=h[:, cols[1]], h_y=h[:, cols[2]],
        evaluated_at=state,
    )


def condition_estimate(M: np.ndarray) -> float:
    """2-norm condition number; inf for singular or non-finite matrices."""
    if M.size == 0:
        return 1.0
    if not np.all(np.isfinite(M)):
        return np.inf
    with np.errstate(all="ignore"):
        cond = float(np.linalg.cond(M))
    return cond if np.isfinite(cond) else np.inf


def reduced_fast_jacobian(
    blocks: JacobianBlocks, condition_limit: float = config.CONDITION_LIMIT
) -> np.ndarray:
    """f_x − f_y g_y⁻¹ g_x."""
    if blocks.g_y.size == 0:
        return blocks.f_x.copy()
    cond = condition_estimate(blocks.g_y)
    if cond > condition_limit:
        raise SingularAlgebraic(cond)
    return blocks.f_x - blocks.f_y @ scipy.linalg.solve(blocks.g_y, blocks.g_x)


def reduced_slow_jacobian(
    blocks: JacobianBlocks, condition_limit: float = config.CONDITION_LIMIT
) -> np.ndarray:
    """Linearised QSS slow dynamics: h_zc − [h_x h_y] [[f_x f_y] [g_x g_y]]⁻¹ [[f_zc] [g_zc]]."""
    fast = np.block([[blocks.f_x, blocks.f_y], [blocks.g_x, blocks.g_y]])
    if fast.size == 0:
        return blocks.h_zc.copy()
    cond = condition_estimate(fast)
    if cond > condition_limit:
        raise SingularAlgebraic(cond)
    coupling = np.vstack([blocks.f_zc, blocks.g_zc])
    return blocks.h_zc - np.hstack([blocks.h_x, blocks.h_y]) @ scipy.linalg.solve(fast, coupling)
