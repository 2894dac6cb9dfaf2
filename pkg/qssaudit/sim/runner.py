"""
Fixed-step event-driven integration loop shared by every model.

The loop lands exactly on scenario events, LTC sampling instants and OXL
expiry instants, applies h_d after every accepted step and stops on
convergence to a SEP, numerical failure or divergence.
"""

import logging
import time
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Tuple

import numpy as np

from ..dae.model import DaeModel, PowerSystemModel
from ..dae.state import PartitionedState
from ..exceptions import NewtonFailure, QssSingularity
from ..netmodel.specs import EventSpec, SystemSpec
from ..solvers.equilibrium import (
    InitialPoint,
    initialize_equilibrium,
    project_to_manifold,
    solve_algebraic,
    solve_long_term_equilibrium,
)
from ..solvers.newton import NewtonConfig, NewtonStatus
from .integrators import qss_step, step_trapezoidal, transient_step
from .settings import SimConfig
from .trajectory import Termination, TerminationKind, Trajectory, Transition

logger = logging.getLogger(__name__)

Step = Callable[..., PartitionedState]
Settle = Callable[[DaeModel, PartitionedState, NewtonConfig], PartitionedState]


def _qss_settle(model: DaeModel, state: PartitionedState, newton: NewtonConfig) -> PartitionedState:
    try:
        return project_to_manifold(model, state, newton)
    except QssSingularity:
        raise
    except NewtonFailure as e:
        raise QssSingularity(str(e), e.result) from e


@dataclass(frozen=True)
class Integration:
    """How one model advances, re-settles after jumps and what it freezes."""

    name: str
    step: Step
    settle: Settle
    freeze_slow: bool = False
    freeze_discrete: bool = False


COMPLETE = Integration("complete", step_trapezoidal, solve_algebraic)
QSS = Integration("qss", qss_step, _qss_settle)
TRANSIENT = Integration(
    "transient", transient_step, solve_algebraic, freeze_slow=True, freeze_discrete=True
)
FROZEN_COMPLETE = Integration(
    "frozen_complete", step_trapezoidal, solve_algebraic, freeze_discrete=True
)


def prepare(
    target: "DaeModel | SystemSpec | InitialPoint",
    start: Optional[PartitionedState] = None,
) -> Tuple[DaeModel, PartitionedState]:
    """Model and initial state for a run."""
    if isinstance(target, DaeModel):
        return target, start if start is not None else target.initial_state()
    if isinstance(target, SystemSpec):
        if start is not None and target.initialized:
            return PowerSystemModel(target), start
        target = initialize_equilibrium(target)
    return PowerSystemModel(target.system), start if start is not None else target.state


def failure_termination(
    exc: NewtonFailure, t: float, state: PartitionedState, cfg: SimConfig
) -> Termination:
    """SingularityLikely for singular/ill-conditioned Newton failures, Diverged otherwise."""
    result = exc.result
    singular = isinstance(exc, QssSingularity) or (
        result is not None
        and (
            result.status is NewtonStatus.SINGULAR_JACOBIAN
            or result.condition_estimate > cfg.condition_limit
        )
    )
    kind = TerminationKind.SINGULARITY_LIKELY if singular else TerminationKind.DIVERGED
    return Termination(kind, t, state, str(exc))


def _max_abs(v: np.ndarray) -> float:
    return float(np.max(np.abs(v))) if len(v) else 0.0


class _Run:
    def __init__(
        self,
        model: DaeModel,
        state: PartitionedState,
        integration: Integration,
        cfg: SimConfig,
        t_end: float,
        events: Iterable[EventSpec],
        name: str,
        stop_on_sep: bool,
        sep_window: float,
        disturbed_at_start: bool,
    ):
        self.model = model
        self.state = state
        self.integration = integration
        self.cfg = cfg
        self.t_end = t_end
        self.pending = deque(sorted(events, key=lambda ev: ev.time))
        self.stop_on_sep = stop_on_sep
        self.sep_window = sep_window
        self.eps = 1e-10 * max(1.0, abs(t_end))
        self.disturbances: List[float] = [state.t] if disturbed_at_start else []
        self.last_change = state.t
        self.traj = Trajectory(name, model.layout)

    # Step schedule

    def _step_size(self, t: float) -> float:
        for t_ev in self.disturbances:
            if t_ev - self.eps <= t < t_ev + self.cfg.transient_window - self.eps:
                return self.cfg.h_transient
        return self.cfg.h

    def _next_time(self, t: float) -> float:
        """End of the next step: t + h, or the nearest stop within reach."""
        h = self._step_size(t)
        target = t + h
        slack = 1e-6 * h
        stops = [self.t_end]
        if self.pending:
            stops.append(self.pending[0].time)
        if not self.integration.freeze_discrete:
            stops.extend(self.model.discrete_instants(self.state.zd, t, target + slack))
        nearest = min(s for s in stops if s > t + self.eps)
        return nearest if nearest <= target + slack else target

    # Checks

    def _divergence(self) -> Optional[Termination]:
        state = self.state
        v = state.vector()
        if not np.all(np.isfinite(v)) or _max_abs(v) > self.cfg.max_state_norm:
            return Termination(
                TerminationKind.DIVERGED, state.t, state,
                f"state norm {_max_abs(v):.3e} exceeds {self.cfg.max_state_norm:g}",
            )
        reason = self.model.instability(state, self.cfg.max_angle_spread_deg)
        if reason:
            return Termination(TerminationKind.DIVERGED, state.t, state, reason)
        return None

    def _at_sep(self) -> bool:
        state, cfg = self.state, self.cfg
        if self.pending or state.t - self.last_change < self.sep_window - self.eps:
            return False
        f, g, hc = self.model.residuals(state)
        families = (f, g) if self.integration.freeze_slow else (f, g, hc)
        if any(_max_abs(r) > cfg.sep_tol for r in families):
            return False
        now = state.vector()
        for past in self.traj.samples_since(state.t - self.sep_window - self.eps):
            if _max_abs(past.vector() - now) > cfg.sep_tol:
                return False
        return self.integration.freeze_discrete or self.model.is_fixed_point(state)

    def _polish(self) -> PartitionedState:
        state, newton = self.state, self.cfg.one_shot_newton
        try:
            if self.integration.freeze_slow:
                sep = project_to_manifold(self.model, state, newton)
            else:
                sep = solve_long_term_equilibrium(self.model, state, newton)
        except NewtonFailure as e:
            logger.warning(
                "%s: SEP at t=%.4f could not be polished: %s",
                self.traj.model_name, state.t, e,
            )
            return state
        moved = _max_abs(sep.vector() - state.vector())
        if moved > 1e3 * self.cfg.sep_tol:
            logger.warning(
                "%s: polished SEP moved %.3e from the simulated point; keeping the latter",
                self.traj.model_name, moved,
            )
            return state
        if not self.integration.freeze_discrete and not self.model.is_fixed_point(sep):
            logger.warning("%s: polished SEP is not a discrete fixed point", self.traj.model_name)
            return state
        return sep

    # Loop

    def _apply_due_events(self) -> Optional[Termination]:
        applied = False
        while self.pending and self.pending[0].time <= self.state.t + self.eps:
            ev = self.pending.popleft()
            self.model = self.model.with_event(ev)
            self.traj.events.append((self.state.t, ev.describe()))
            self.disturbances.append(ev.time)
            logger.info("%s: t=%.4f %s", self.traj.model_name, self.state.t, ev.describe())
            applied = True
        if not applied:
            return None
        self.last_change = self.state.t
        try:
            self.state = self.integration.settle(self.model, self.state, self.cfg.one_shot_newton)
        except NewtonFailure as e:
            return failure_termination(e, self.state.t, self.state, self.cfg)
        self.traj.record(self.state)
        return None

    def _discrete_update(self, new: PartitionedState) -> PartitionedState:
        zd_new = self.model.hd(new, new.t)
        if zd_new.mode() == new.zd.mode():
            return new if zd_new == new.zd else new.with_zd(zd_new)
        before = new.zd
        description = before.describe_change(zd_new, self.model.layout.zd)
        jumped = new.with_zd(zd_new)
        self.traj.events.append((new.t, description))
        self.last_change = new.t
        logger.info("%s: t=%.4f %s", self.traj.model_name, new.t, description)
        try:
            settled = self.integration.settle(self.model, jumped, self.cfg.one_shot_newton)
        except NewtonFailure:
            # the unsettled jump stands in for the post-transition state
            self.traj.transitions.append(
                Transition(new.t, before, zd_new, jumped, self.model, description)
            )
            raise
        self.traj.transitions.append(
            Transition(new.t, before, zd_new, settled, self.model, description)
        )
        return settled

    def run(self) -> Trajectory:
        started = time.perf_counter()
        self.traj.record(self.state)
        termination = None
        while termination is None:
            termination = self._apply_due_events()
            if termination is not None:
                break
            state = self.state
            if state.t >= self.t_end - self.eps:
                termination = Termination(TerminationKind.REACHED_TEND, state.t, state)
                break
            if self.stop_on_sep and self._at_sep():
                termination = Termination(TerminationKind.CONVERGED_TO_SEP, state.t, self._polish())
                break

            t_next = self._next_time(state.t)
            try:
                new = self.integration.step(
                    self.model, state, t_next - state.t, newton=self.cfg.newton
                )
                new = new.with_continuous(t=t_next)
                if not self.integration.freeze_discrete:
                    new = self._discrete_update(new)
            except NewtonFailure as e:
                termination = failure_termination(e, t_next, state, self.cfg)
                break
            self.state = new
            self.traj.record(new)
            termination = self._divergence()

        self.traj.termination = termination
        self.traj.final_model = self.model
        self.traj.wall_time = time.perf_counter() - started
        log = logger.warning if termination.failed else logger.info
        log(
            "%s: %s at t=%.4f%s",
            self.traj.model_name,
            termination.kind.value,
            termination.t,
            f" ({termination.detail})" if termination.detail else "",
        )
        return self.traj


def simulate(
    model: DaeModel,
    state: PartitionedState,
    integration: Integration,
    cfg: SimConfig,
    t_end: float,
    events: Iterable[EventSpec] = (),
    *,
    name: Optional[str] = None,
    stop_on_sep: bool = True,
    sep_window: Optional[float] = None,
    disturbed_at_start: bool = False,
) -> Trajectory:
    return _Run(
        model,
        state,
        integration,
        cfg,
        t_end,
        events,
        name or integration.name,
        stop_on_sep,
        cfg.sep_window if sep_window is None else sep_window,
        disturbed_at_start,
    ).run()
