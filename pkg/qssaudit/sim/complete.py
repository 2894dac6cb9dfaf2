"""Complete-model simulation (fast, slow and discrete dynamics together)."""

import logging
from typing import Optional

from ..dae.model import DaeModel
from ..dae.state import PartitionedState
from ..netmodel.specs import ScenarioSpec, SystemSpec
from ..solvers.equilibrium import InitialPoint
from .integrators import step_trapezoidal
from .runner import COMPLETE, FROZEN_COMPLETE, prepare, simulate
from .settings import SimConfig
from .trajectory import Trajectory

logger = logging.getLogger(__name__)

__all__ = ["run_complete", "run_frozen_complete", "step_trapezoidal"]


def run_complete(
    sys: "SystemSpec | InitialPoint | DaeModel",
    scenario: ScenarioSpec,
    cfg: Optional[SimConfig] = None,
    start: Optional[PartitionedState] = None,
    *,
    stop_on_sep: bool = True,
) -> Trajectory:
    """
    Integrate the complete model through ``scenario``.

    Without ``start`` the run begins at the back-solved equilibrium of the
    system (or the fixture's own initial state).
    """
    cfg = cfg or SimConfig()
    model, state = prepare(sys, start)
    logger.info(
        "complete: t=%.4f -> %.4f, %d events",
        state.t, scenario.t_end, len(scenario.events),
    )
    return simulate(
        model, state, COMPLETE, cfg, scenario.t_end, scenario.events, stop_on_sep=stop_on_sep
    )


def run_frozen_complete(
    model: DaeModel,
    snapshot: PartitionedState,
    cfg: Optional[SimConfig] = None,
    T: Optional[float] = None,
) -> Trajectory:
    """The complete model with z_d held at the snapshot's value for T seconds."""
    cfg = cfg or SimConfig()
    T = cfg.transient_t_max if T is None else T
    return simulate(
        model,
        snapshot,
        FROZEN_COMPLETE,
        cfg,
        snapshot.t + T,
        disturbed_at_start=True,
    )
