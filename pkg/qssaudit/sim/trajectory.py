"""Trajectories, discrete transitions and termination reasons."""

import bisect
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from ..dae.model import DaeModel
from ..dae.state import DiscreteState, PartitionedState, StateLayout


class TerminationKind(str, Enum):
    REACHED_TEND = "ReachedTend"
    CONVERGED_TO_SEP = "ConvergedToSEP"
    SINGULARITY_LIKELY = "SingularityLikely"
    DIVERGED = "Diverged"


@dataclass(frozen=True)
class Termination:
    kind: TerminationKind
    t: float
    # The SEP for ConvergedToSEP, the last state otherwise
    state: Optional[PartitionedState] = None
    detail: str = ""

    @property
    def converged(self) -> bool:
        return self.kind is TerminationKind.CONVERGED_TO_SEP

    @property
    def failed(self) -> bool:
        return self.kind in (TerminationKind.SINGULARITY_LIKELY, TerminationKind.DIVERGED)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "t": self.t, "detail": self.detail}


@dataclass(frozen=True, eq=False)
class Transition:
    """A change of tap ratios or OXL status at time t."""

    t: float
    before: DiscreteState
    after: DiscreteState
    # Post-transition state, algebraic (or manifold) jump included
    state: PartitionedState
    # Network model in force at t
    model: DaeModel
    description: str


@dataclass(eq=False)
class Trajectory:
    model_name: str
    layout: StateLayout
    samples: List[PartitionedState] = field(default_factory=list)
    events: List[Tuple[float, str]] = field(default_factory=list)
    transitions: List[Transition] = field(default_factory=list)
    termination: Optional[Termination] = None
    final_model: Optional[DaeModel] = None
    wall_time: float = 0.0
    _times: List[float] = field(default_factory=list, repr=False)

    def record(self, state: PartitionedState) -> None:
        """Append a sample; a state at the last sample's time replaces it."""
        if self._times and state.t <= self._times[-1]:
            if state.t < self._times[-1]:
                raise ValueError(f"sample at t={state.t} precedes t={self._times[-1]}")
            self.samples[-1] = state
            return
        self.samples.append(state)
        self._times.append(state.t)

    @property
    def names(self) -> Tuple[str, ...]:
        return self.layout.names()

    @property
    def times(self) -> np.ndarray:
        return np.array(self._times)

    @property
    def final_state(self) -> PartitionedState:
        return self.samples[-1]

    @property
    def t_start(self) -> float:
        return self._times[0]

    @property
    def t_stop(self) -> float:
        return self._times[-1]

    def samples_since(self, t0: float) -> List[PartitionedState]:
        return self.samples[bisect.bisect_left(self._times, t0):]

    def as_matrix(self) -> np.ndarray:
        """One row per sample, columns in ``names`` order."""
        if not self.samples:
            return np.zeros((0, len(self.names)))
        return np.vstack([s.full_vector() for s in self.samples])
