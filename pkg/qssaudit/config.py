"""
Configuration for the simulator.

Numerical defaults feed SimConfig/NewtonConfig; only logging and
parallelism are read from the environment.
"""

import os
from dataclasses import dataclass


@dataclass
class Config:
    # Ambient
    LOG_LEVEL: str = os.getenv("QSSAUDIT_LOG_LEVEL", "INFO")
    MAX_WORKERS: int = int(os.getenv("QSSAUDIT_MAX_WORKERS", "4"))

    # Integration
    STEP_LONG_TERM: float = 0.05
    STEP_TRANSIENT: float = 0.005
    TRANSIENT_WINDOW: float = 5.0

    # Tolerances
    MANIFOLD_TOL: float = 1e-8
    SEP_TOL: float = 1e-6
    SEP_WINDOW: float = 10.0
    SEP_MATCH_TOL: float = 1e-5
    NEWTON_TOL: float = 1e-10
    NEWTON_MAX_ITER: int = 50

    # Failure classification
    MAX_STATE_NORM: float = 1e6
    CONDITION_LIMIT: float = 1e12
    MAX_ANGLE_SPREAD_DEG: float = 180.0
    STABILITY_MARGIN: float = 1e-8

    # Transient-model membership runs
    TRANSIENT_T_MAX: float = 60.0

    # Network
    FAULT_ADMITTANCE: float = 1e4
    SCHEMA_VERSION: int = 1


config = Config()
