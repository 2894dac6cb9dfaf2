"""
Per-transition audit: is the complete model's post-transition state inside
the stability region of the transient model with the new z_d?
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional

from ..config import config
from ..dae.model import DaeModel, as_model, system_layout
from ..dae.spectrum import GammaSResult, gamma_s_membership
from ..dae.state import DiscreteState
from ..exceptions import NewtonFailure, NotOnManifold, SpecError, SpectrumError
from ..netmodel.specs import SystemSpec
from ..sim.complete import run_frozen_complete
from ..sim.settings import SimConfig
from ..sim.trajectory import Termination, Trajectory, Transition
from ..sim.transient import Membership, MembershipResult, stability_region_membership
from ..solvers.equilibrium import project_to_manifold

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AuditRecord:
    event_time: float
    z_d_before: DiscreteState
    z_d_after: DiscreteState
    transition: str
    membership: MembershipResult
    # Γ_s test at the manifold point nearest to the snapshot
    gamma_s: Optional[GammaSResult] = None
    gamma_s_note: str = ""
    frozen_complete: Optional[Termination] = None

    @property
    def outside(self) -> bool:
        return self.membership.status is Membership.OUTSIDE

    def to_dict(self, zd_names) -> dict:
        return {
            "event_time": self.event_time,
            "transition": self.transition,
            "z_d_before": self.z_d_before.as_dict(zd_names),
            "z_d_after": self.z_d_after.as_dict(zd_names),
            "membership": self.membership.to_dict(),
            "gamma_s": self.gamma_s.to_dict() if self.gamma_s else None,
            "gamma_s_note": self.gamma_s_note,
            "frozen_complete": self.frozen_complete.to_dict() if self.frozen_complete else None,
        }


def _audit(tr: Transition, cfg: SimConfig, frozen: bool) -> AuditRecord:
    membership = stability_region_membership(tr.model, tr.state, cfg, cfg.transient_t_max)

    gamma, note = None, ""
    try:
        point = project_to_manifold(tr.model, tr.state, cfg.one_shot_newton)
        gamma = gamma_s_membership(
            tr.model,
            point,
            manifold_tol=cfg.manifold_tol,
            margin=cfg.stability_margin,
            condition_limit=cfg.condition_limit,
        )
    except (NewtonFailure, NotOnManifold, SpectrumError) as e:
        note = str(e)

    frozen_term = run_frozen_complete(tr.model, tr.state, cfg).termination if frozen else None
    logger.info(
        "Audit t=%.4f %s: %s%s",
        tr.t,
        tr.description,
        membership.status.value,
        f", Γ_s {gamma.status.value}" if gamma else "",
    )
    return AuditRecord(
        event_time=tr.t,
        z_d_before=tr.before,
        z_d_after=tr.after,
        transition=tr.description,
        membership=membership,
        gamma_s=gamma,
        gamma_s_note=note,
        frozen_complete=frozen_term,
    )


def per_event_audit(
    sys: "DaeModel | SystemSpec | None",
    traj_c: Trajectory,
    cfg: Optional[SimConfig] = None,
    *,
    frozen: bool = False,
) -> List[AuditRecord]:
    """
    One record per z_d transition of the complete run, in time order.

    The transient model of each record freezes (z_c, z_d) at their
    post-transition values and starts from the complete model's (x, y).
    """
    cfg = cfg or SimConfig()
    if sys is not None:
        layout = system_layout(sys) if isinstance(sys, SystemSpec) else as_model(sys).layout
        if layout != traj_c.layout:
            raise SpecError("trajectory does not belong to this system")
    if not traj_c.transitions:
        return []
    with ThreadPoolExecutor(max_workers=config.MAX_WORKERS) as pool:
        return list(pool.map(lambda tr: _audit(tr, cfg, frozen), traj_c.transitions))
