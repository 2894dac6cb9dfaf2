"""Residual assembly, Jacobian blocks and spectra of the partitioned DAE."""

from .jacobian import (
    JacobianBlocks,
    condition_estimate,
    fd_jacobian,
    jacobian_blocks,
    reduced_fast_jacobian,
    reduced_slow_jacobian,
)
from .model import DaeModel, PowerSystemModel, as_model, system_layout
from .residuals import DeviceTables, eval_f, eval_g, eval_hc, step_hd
from .spectrum import (
    GammaS,
    GammaSResult,
    SpectrumResult,
    eigenvalues,
    gamma_s_membership,
    slow_spectrum,
)
from .state import DiscreteState, PartitionedState, StateLayout

__all__ = [
    "DaeModel",
    "DeviceTables",
    "DiscreteState",
    "GammaS",
    "GammaSResult",
    "JacobianBlocks",
    "PartitionedState",
    "PowerSystemModel",
    "SpectrumResult",
    "StateLayout",
    "as_model",
    "condition_estimate",
    "eigenvalues",
    "eval_f",
    "eval_g",
    "eval_hc",
    "fd_jacobian",
    "gamma_s_membership",
    "jacobian_blocks",
    "reduced_fast_jacobian",
    "reduced_slow_jacobian",
    "slow_spectrum",
    "step_hd",
    "system_layout",
]
