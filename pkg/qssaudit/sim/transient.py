"""
Transient model (z_c and z_d frozen) and trajectory-based membership in the
transient stability region.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from ..dae.model import DaeModel, as_model
from ..dae.spectrum import GammaSResult, gamma_s_membership
from ..dae.state import PartitionedState
from ..exceptions import NewtonFailure, NotOnManifold, SingularAlgebraic, SpectrumError
from ..netmodel.specs import SystemSpec
from .runner import TRANSIENT, failure_termination, simulate
from .settings import SimConfig
from .trajectory import Termination, Trajectory

logger = logging.getLogger(__name__)

# Share of the run over which the state must have settled
SETTLE_FRACTION = 0.1


class Membership(str, Enum):
    INSIDE = "Inside"
    OUTSIDE = "Outside"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class MembershipResult:
    status: Membership
    reason: str = ""
    sep: Optional[PartitionedState] = None
    termination: Optional[Termination] = None
    gamma_s: Optional[GammaSResult] = None

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "reason": self.reason,
            "termination": self.termination.to_dict() if self.termination else None,
            "gamma_s_at_sep": self.gamma_s.to_dict() if self.gamma_s else None,
        }


def run_transient(
    sys: "DaeModel | SystemSpec",
    snapshot: PartitionedState,
    cfg: Optional[SimConfig] = None,
    T_max: Optional[float] = None,
) -> Trajectory:
    """Integrate x' = f, 0 = g from the snapshot with (z_c, z_d) frozen."""
    cfg = cfg or SimConfig()
    T_max = cfg.transient_t_max if T_max is None else T_max
    model = as_model(sys)
    state = snapshot
    g = model.g(snapshot.zc, snapshot.zd, snapshot.x, snapshot.y)
    if len(g) and float(abs(g).max()) > cfg.manifold_tol:
        try:
            state = TRANSIENT.settle(model, snapshot, cfg.one_shot_newton)
        except NewtonFailure as e:
            traj = Trajectory("transient", model.layout)
            traj.record(snapshot)
            traj.termination = failure_termination(e, snapshot.t, snapshot, cfg)
            traj.final_model = model
            return traj
    return simulate(
        model,
        state,
        TRANSIENT,
        cfg,
        snapshot.t + T_max,
        sep_window=SETTLE_FRACTION * T_max,
        disturbed_at_start=True,
    )


def stability_region_membership(
    sys: "DaeModel | SystemSpec",
    snapshot: PartitionedState,
    cfg: Optional[SimConfig] = None,
    T_max: Optional[float] = None,
) -> MembershipResult:
    """
    Inside iff the transient model converges to a point in Γ_s, Outside iff
    it diverges or its Newton iteration fails, Inconclusive otherwise.
    """
    cfg = cfg or SimConfig()
    model = as_model(sys)
    traj = run_transient(model, snapshot, cfg, T_max)
    term = traj.termination

    if term.failed:
        return MembershipResult(
            Membership.OUTSIDE, term.detail or term.kind.value, termination=term
        )
    if not term.converged:
        logger.warning("Transient run from t=%.4f did not settle within T_max", snapshot.t)
        return MembershipResult(
            Membership.INCONCLUSIVE, "no convergence within T_max", termination=term
        )

    try:
        gamma = gamma_s_membership(
            model,
            term.state,
            manifold_tol=cfg.manifold_tol,
            margin=cfg.stability_margin,
            condition_limit=cfg.condition_limit,
        )
    except (NotOnManifold, SingularAlgebraic, SpectrumError) as e:
        return MembershipResult(Membership.INCONCLUSIVE, str(e), term.state, term)
    if gamma.inside:
        return MembershipResult(Membership.INSIDE, "", term.state, term, gamma)
    return MembershipResult(
        Membership.INCONCLUSIVE,
        f"settled at a point with {gamma.status.value}",
        term.state,
        term,
        gamma,
    )
