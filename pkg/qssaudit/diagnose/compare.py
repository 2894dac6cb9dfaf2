"""Trajectory comparison and outcome classification."""

from enum import Enum
from typing import Dict

import numpy as np

from ..exceptions import EmptyOverlap
from ..sim.trajectory import Trajectory


class Verdict(str, Enum):
    AGREE_STABLE_SAME_SEP = "AgreeStableSameSEP"
    AGREE_UNSTABLE = "AgreeUnstable"
    COUNTER_EXAMPLE = "CounterExampleQssStableCompleteUnstable"
    DIFFERENT_SEPS = "DifferentSEPs"
    INCONCLUSIVE = "Inconclusive"


def compare_runs(traj_c: Trajectory, traj_q: Trajectory) -> Dict[str, float]:
    """Per-variable max |difference| over the common time interval."""
    lo = max(traj_c.t_start, traj_q.t_start)
    hi = min(traj_c.t_stop, traj_q.t_stop)
    if hi < lo:
        raise EmptyOverlap(
            f"trajectories do not overlap: [{traj_c.t_start:g}, {traj_c.t_stop:g}] "
            f"vs [{traj_q.t_start:g}, {traj_q.t_stop:g}]"
        )

    tc, tq = traj_c.times, traj_q.times
    grid = np.union1d(tc[(tc >= lo) & (tc <= hi)], tq[(tq >= lo) & (tq <= hi)])
    if not len(grid):
        grid = np.array([lo])
    data_c, data_q = traj_c.as_matrix(), traj_q.as_matrix()
    col_q = {name: j for j, name in enumerate(traj_q.names)}

    deviation = {}
    for i, name in enumerate(traj_c.names):
        j = col_q.get(name)
        if j is None:
            continue
        a = np.interp(grid, tc, data_c[:, i])
        b = np.interp(grid, tq, data_q[:, j])
        deviation[name] = float(np.max(np.abs(a - b)))
    return deviation


def seps_match(traj_c: Trajectory, traj_q: Trajectory, tol: float) -> bool:
    a = traj_c.termination.state.full_vector()
    b = traj_q.termination.state.full_vector()
    return a.shape == b.shape and bool(np.all(np.abs(a - b) <= tol))


def classify_outcome(traj_c: Trajectory, traj_q: Trajectory, tol: float) -> Verdict:
    c, q = traj_c.termination, traj_q.termination
    if c.converged and q.converged:
        if seps_match(traj_c, traj_q, tol):
            return Verdict.AGREE_STABLE_SAME_SEP
        return Verdict.DIFFERENT_SEPS
    if q.converged and c.failed:
        return Verdict.COUNTER_EXAMPLE
    if c.failed and q.failed:
        return Verdict.AGREE_UNSTABLE
    return Verdict.INCONCLUSIVE
