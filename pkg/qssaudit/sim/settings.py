"""Run-time numerical settings shared by every simulator."""

from dataclasses import dataclass, field, replace

from ..config import config
from ..exceptions import SpecError
from ..solvers.newton import NewtonConfig

_POSITIVE = (
    "manifold_tol",
    "sep_tol",
    "sep_window",
    "max_state_norm",
    "condition_limit",
    "max_angle_spread_deg",
    "transient_t_max",
    "stability_margin",
    "sep_match_tol",
)


@dataclass(frozen=True)
class SimConfig:
    # Long-term and post-event step sizes (s)
    h: float = config.STEP_LONG_TERM
    h_transient: float = config.STEP_TRANSIENT
    transient_window: float = config.TRANSIENT_WINDOW

    manifold_tol: float = config.MANIFOLD_TOL
    sep_tol: float = config.SEP_TOL
    sep_window: float = config.SEP_WINDOW
    sep_match_tol: float = config.SEP_MATCH_TOL

    max_state_norm: float = config.MAX_STATE_NORM
    condition_limit: float = config.CONDITION_LIMIT
    max_angle_spread_deg: float = config.MAX_ANGLE_SPREAD_DEG
    stability_margin: float = config.STABILITY_MARGIN

    transient_t_max: float = config.TRANSIENT_T_MAX
    newton: NewtonConfig = field(default_factory=lambda: NewtonConfig(reuse_jacobian=True))

    def __post_init__(self):
        if not (self.h > 0 and self.h_transient > 0):
            raise SpecError("step must be positive", field="SimConfig.h")
        if not self.transient_window >= 0:
            raise SpecError("transient_window must be >= 0", field="SimConfig.transient_window")
        for name in _POSITIVE:
            if not getattr(self, name) > 0:
                raise SpecError(f"{name} must be positive", field=f"SimConfig.{name}")

    def with_step(self, step: float) -> "SimConfig":
        """Same settings with one step size for both regimes."""
        return replace(self, h=step, h_transient=step)

    @property
    def one_shot_newton(self) -> NewtonConfig:
        """Full Newton for algebraic jumps and projections."""
        return replace(self.newton, reuse_jacobian=False)
