"""Scenario runs with the complete-to-QSS hand-off."""

import logging
from typing import Optional

from ..dae.model import DaeModel
from ..exceptions import SpecError
from ..netmodel.specs import ScenarioSpec, SystemSpec
from ..solvers.equilibrium import InitialPoint
from .complete import run_complete
from .qss import continue_qss, run_qss
from .settings import SimConfig
from .trajectory import Trajectory

logger = logging.getLogger(__name__)

MODELS = ("complete", "qss")


def run_scenario(
    sys: "SystemSpec | InitialPoint | DaeModel",
    scenario: ScenarioSpec,
    cfg: Optional[SimConfig] = None,
    model: str = "complete",
) -> Trajectory:
    """
    Run one model through a scenario.

    With ``scenario.qss_start`` set, the QSS trajectory is the complete run
    up to that time continued by QSS from its manifold projection.
    """
    cfg = cfg or SimConfig()
    if model == "complete":
        return run_complete(sys, scenario, cfg)
    if model != "qss":
        raise SpecError(f"unknown model '{model}'", field="--model")
    if not scenario.qss_start:
        return run_qss(sys, scenario, cfg)

    handoff = scenario.qss_start
    prefix = run_complete(
        sys,
        ScenarioSpec(
            t_end=handoff,
            events=tuple(ev for ev in scenario.events if ev.time < handoff),
        ),
        cfg,
        stop_on_sep=False,
    )
    prefix.model_name = "qss"
    if prefix.termination.failed:
        logger.warning("qss: complete-model prefix failed before the hand-off at t=%g", handoff)
        return prefix

    logger.info("qss: hand-off from the complete model at t=%.4f", handoff)
    rest = continue_qss(
        prefix.final_model,
        prefix.final_state,
        [ev for ev in scenario.events if ev.time >= handoff],
        cfg,
        scenario.t_end,
    )
    merged = Trajectory("qss", rest.layout)
    for state in prefix.samples[:-1] + rest.samples:
        merged.record(state)
    merged.events = prefix.events + rest.events
    merged.transitions = prefix.transitions + rest.transitions
    merged.termination = rest.termination
    merged.final_model = rest.final_model
    merged.wall_time = prefix.wall_time + rest.wall_time
    return merged
