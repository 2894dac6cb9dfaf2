"""Diagnosis of QSS stability verdicts against the complete model."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..config import config
from ..dae.model import DaeModel
from ..dae.spectrum import GammaSResult, SpectrumResult, gamma_s_membership, slow_spectrum
from ..dae.state import PartitionedState, StateLayout
from ..exceptions import (
    EmptyOverlap,
    NewtonFailure,
    NotOnManifold,
    SingularAlgebraic,
    SpectrumError,
)
from ..netmodel.specs import ScenarioSpec, SystemSpec
from ..sim.scenario import run_scenario
from ..sim.settings import SimConfig
from ..sim.trajectory import Termination, Trajectory
from ..solvers.equilibrium import InitialPoint, initialize_equilibrium, project_to_manifold
from .audit import AuditRecord, per_event_audit
from .compare import Verdict, classify_outcome, compare_runs

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FastStabilityCheck:
    t: float
    gamma_s: Optional[GammaSResult]
    # Linearised QSS slow dynamics, only computed inside Γ_s
    slow: Optional[SpectrumResult] = None
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "gamma_s": self.gamma_s.to_dict() if self.gamma_s else None,
            "slow": self.slow.to_dict() if self.slow else None,
            "note": self.note,
        }


@dataclass
class DiagnosisReport:
    verdict: Verdict
    layout: StateLayout
    termination_complete: Termination
    termination_qss: Termination
    max_deviation: Dict[str, float] = field(default_factory=dict)
    audits: List[AuditRecord] = field(default_factory=list)
    qss_gamma_s: List[FastStabilityCheck] = field(default_factory=list)

    @property
    def sep_complete(self) -> Optional[PartitionedState]:
        return self.termination_complete.state if self.termination_complete.converged else None

    @property
    def sep_qss(self) -> Optional[PartitionedState]:
        return self.termination_qss.state if self.termination_qss.converged else None

    def to_dict(self) -> dict:
        def sep(state):
            return self.layout.as_dict(state) if state is not None else None

        return {
            "schema": config.SCHEMA_VERSION,
            "verdict": self.verdict.value,
            "termination_complete": self.termination_complete.to_dict(),
            "termination_qss": self.termination_qss.to_dict(),
            "max_deviation": self.max_deviation,
            "sep_complete": sep(self.sep_complete),
            "sep_qss": sep(self.sep_qss),
            "audits": [a.to_dict(self.layout.zd) for a in self.audits],
            "qss_gamma_s": [c.to_dict() for c in self.qss_gamma_s],
        }


def _fast_check(model: DaeModel, state: PartitionedState, cfg: SimConfig) -> FastStabilityCheck:
    try:
        if model.manifold_residual(state) > cfg.manifold_tol:
            state = project_to_manifold(model, state, cfg.one_shot_newton)
        gamma = gamma_s_membership(
            model,
            state,
            manifold_tol=cfg.manifold_tol,
            margin=cfg.stability_margin,
            condition_limit=cfg.condition_limit,
        )
    except (NewtonFailure, NotOnManifold, SpectrumError) as e:
        return FastStabilityCheck(state.t, None, note=str(e))
    if not gamma.inside:
        return FastStabilityCheck(state.t, gamma)
    try:
        slow = slow_spectrum(model, state, condition_limit=cfg.condition_limit)
    except (SingularAlgebraic, SpectrumError) as e:
        return FastStabilityCheck(state.t, gamma, note=str(e))
    return FastStabilityCheck(state.t, gamma, slow)


def qss_fast_stability(
    traj_q: Trajectory, cfg: Optional[SimConfig] = None
) -> List[FastStabilityCheck]:
    """Γ_s test and slow spectrum wherever the QSS run changed z_d, and at its final state."""
    cfg = cfg or SimConfig()
    points: List[Tuple[DaeModel, PartitionedState]] = [
        (tr.model, tr.state) for tr in traj_q.transitions
    ]
    final = traj_q.termination.state if traj_q.termination.converged else traj_q.final_state
    points.append((traj_q.final_model, final))
    return [_fast_check(model, state, cfg) for model, state in points]


def diagnose(
    sys: "SystemSpec | InitialPoint | DaeModel",
    scenario: ScenarioSpec,
    cfg: Optional[SimConfig] = None,
    *,
    frozen_audit: bool = False,
) -> DiagnosisReport:
    """Run both models, compare them and audit every z_d transition of the complete run."""
    cfg = cfg or SimConfig()
    start = initialize_equilibrium(sys) if isinstance(sys, SystemSpec) else sys

    with ThreadPoolExecutor(max_workers=max(1, min(2, config.MAX_WORKERS))) as pool:
        runs = [
            pool.submit(run_scenario, start, scenario, cfg, name)
            for name in ("complete", "qss")
        ]
        traj_c, traj_q = (r.result() for r in runs)

    try:
        deviation = compare_runs(traj_c, traj_q)
    except EmptyOverlap as e:
        logger.warning("No deviation computed: %s", e)
        deviation = {}

    verdict = classify_outcome(traj_c, traj_q, cfg.sep_match_tol)
    audits = per_event_audit(None, traj_c, cfg, frozen=frozen_audit)
    report = DiagnosisReport(
        verdict=verdict,
        layout=traj_c.layout,
        termination_complete=traj_c.termination,
        termination_qss=traj_q.termination,
        max_deviation=deviation,
        audits=audits,
        qss_gamma_s=qss_fast_stability(traj_q, cfg),
    )
    outside = sum(a.outside for a in audits)
    logger.info("Verdict: %s (%d audit records, %d outside)", verdict.value, len(audits), outside)
    return report
