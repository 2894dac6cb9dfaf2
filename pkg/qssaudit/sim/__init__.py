"""Complete, QSS and transient simulators."""

from .complete import run_complete, run_frozen_complete
from .integrators import qss_step, step_trapezoidal, transient_step
from .qss import run_qss
from .scenario import MODELS, run_scenario
from .settings import SimConfig
from .trajectory import Termination, TerminationKind, Trajectory, Transition
from .transient import (
    Membership,
    MembershipResult,
    run_transient,
    stability_region_membership,
)

__all__ = [
    "MODELS",
    "Membership",
    "MembershipResult",
    "SimConfig",
    "Termination",
    "TerminationKind",
    "Trajectory",
    "Transition",
    "qss_step",
    "run_complete",
    "run_frozen_complete",
    "run_qss",
    "run_scenario",
    "run_transient",
    "stability_region_membership",
    "step_trapezoidal",
    "transient_step",
]
