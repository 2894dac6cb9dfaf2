"""QSS-model simulation: slow dynamics on the constraint manifold."""

import logging
from typing import Iterable, Optional

from ..dae.model import DaeModel
from ..dae.state import PartitionedState
from ..exceptions import NewtonFailure
from ..netmodel.specs import EventSpec, ScenarioSpec, SystemSpec
from ..solvers.equilibrium import InitialPoint
from .integrators import qss_step
from .runner import QSS, failure_termination, prepare, simulate
from .settings import SimConfig
from .trajectory import Trajectory

logger = logging.getLogger(__name__)

__all__ = ["qss_step", "run_qss", "continue_qss"]


def continue_qss(
    model: DaeModel,
    state: PartitionedState,
    events: Iterable[EventSpec],
    cfg: SimConfig,
    t_end: float,
) -> Trajectory:
    """Run QSS from ``state`` under ``model``, projecting onto Γ first if needed."""
    if model.manifold_residual(state) > cfg.manifold_tol:
        try:
            state = QSS.settle(model, state, cfg.one_shot_newton)
        except NewtonFailure as e:
            traj = Trajectory("qss", model.layout)
            traj.record(state)
            traj.termination = failure_termination(e, state.t, state, cfg)
            traj.final_model = model
            logger.warning("qss: start state cannot be projected onto the manifold: %s", e)
            return traj
    return simulate(model, state, QSS, cfg, t_end, events)


def run_qss(
    sys: "SystemSpec | InitialPoint | DaeModel",
    scenario: ScenarioSpec,
    cfg: Optional[SimConfig] = None,
    start_state: Optional[PartitionedState] = None,
    start_time: Optional[float] = None,
) -> Trajectory:
    """
    Integrate the QSS model from ``start_time``.

    Scenario events before ``start_time`` are taken as already in force;
    the remaining ones are applied as in the complete model.
    """
    cfg = cfg or SimConfig()
    model, state = prepare(sys, start_state)
    if start_time is not None:
        state = state.with_continuous(t=start_time)
    for ev in scenario.events:
        if ev.time < state.t:
            model = model.with_event(ev)
    pending = [ev for ev in scenario.events if ev.time >= state.t]
    logger.info("qss: t=%.4f -> %.4f, %d events", state.t, scenario.t_end, len(pending))
    return continue_qss(model, state, pending, cfg, scenario.t_end)
