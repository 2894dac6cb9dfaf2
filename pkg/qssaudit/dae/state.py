"""
Partitioned DAE state.

z_c: slow continuous states, z_d: discrete states, x: fast states,
y: algebraic variables, t: time.
"""

from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import numpy as np


@dataclass(frozen=True)
class DiscreteState:
    """LTC ratios and OXL status, in system order."""

    taps: Tuple[float, ...] = ()
    oxl_active: Tuple[bool, ...] = ()
    # Start of the ongoing E_fd > limit violation per OXL, None when clear
    oxl_since: Tuple[Optional[float], ...] = ()

    def mode(self) -> Tuple[Tuple[float, ...], Tuple[bool, ...]]:
        """The part of z_d whose change is a discrete transition."""
        return self.taps, self.oxl_active

    def as_vector(self) -> np.ndarray:
        return np.array(
            [*self.taps, *(1.0 if a else 0.0 for a in self.oxl_active)], dtype=float
        )

    def as_dict(self, names: Tuple[str, ...]) -> Dict[str, object]:
        """Tap ratios as floats, OXL flags as booleans."""
        values = [*self.taps, *self.oxl_active]
        return {name: (v if isinstance(v, bool) else float(v)) for name, v in zip(names, values)}

    def describe_change(self, after: "DiscreteState", names: Tuple[str, ...]) -> str:
        before_v, after_v = self.as_vector(), after.as_vector()
        parts = [
            f"{name}: {b:g} -> {a:g}"
            for name, b, a in zip(names, before_v, after_v)
            if b != a
        ]
        return "; ".join(parts)


@dataclass(frozen=True, eq=False)
class PartitionedState:
    zc: np.ndarray
    zd: DiscreteState
    x: np.ndarray
    y: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        for name in ("zc", "x", "y"):
            arr = np.array(getattr(self, name), dtype=float).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def with_continuous(self, zc=None, x=None, y=None, t=None) -> "PartitionedState":
        return replace(
            self,
            zc=self.zc if zc is None else zc,
            x=self.x if x is None else x,
            y=self.y if y is None else y,
            t=self.t if t is None else t,
        )

    def with_zd(self, zd: DiscreteState) -> "PartitionedState":
        return replace(self, zd=zd)

    def vector(self) -> np.ndarray:
        """Continuous part stacked as (z_c, x, y)."""
        return np.concatenate([self.zc, self.x, self.y])

    def full_vector(self) -> np.ndarray:
        """Every variable in CSV order (z_c, z_d, x, y)."""
        return np.concatenate([self.zc, self.zd.as_vector(), self.x, self.y])

    def same_as(self, other: "PartitionedState") -> bool:
        return (
            self.t == other.t
            and self.zd == other.zd
            and np.array_equal(self.zc, other.zc)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
        )


@dataclass(frozen=True)
class StateLayout:
    """Fully qualified variable names (partition.device.var) per partition."""

    zc: Tuple[str, ...] = ()
    zd: Tuple[str, ...] = ()
    x: Tuple[str, ...] = ()
    y: Tuple[str, ...] = ()
    _index: Dict[str, int] = field(
        default_factory=dict, init=False, compare=False, repr=False
    )

    def __post_init__(self):
        self._index.update({name: i for i, name in enumerate(self.names())})

    @property
    def n_zc(self) -> int:
        return len(self.zc)

    @property
    def n_x(self) -> int:
        return len(self.x)

    @property
    def n_y(self) -> int:
        return len(self.y)

    def names(self) -> Tuple[str, ...]:
        return self.zc + self.zd + self.x + self.y

    def index(self, name: str) -> int:
        """Position of ``name`` in ``PartitionedState.full_vector()``."""
        return self._index[name]

    def as_dict(self, state: PartitionedState) -> Dict[str, float]:
        return dict(zip(self.names(), state.full_vector().tolist()))

    def split(self, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Split a stacked (z_c, x, y) vector."""
        a, b = self.n_zc, self.n_zc + self.n_x
        return v[:a], v[a:b], v[b:]
