"""
DAE model interface.

Every simulator works on a DaeModel: the complete model, the QSS model and
the transient model are different ways of integrating the same f, g, h_c
and h_d.
"""

import logging
import math
from abc import ABC, abstractmethod
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..exceptions import SpecError
from ..netmodel.network import (
    AdmittanceMatrix,
    TopologyOverlay,
    apply_event,
    build_admittance,
)
from ..netmodel.specs import EventSpec, SystemSpec
from .residuals import (
    GEN_STATES,
    DeviceTables,
    discrete_update,
    fast_rates,
    pending_actions,
    power_mismatch,
    slow_rates,
)
from .state import DiscreteState, PartitionedState, StateLayout

logger = logging.getLogger(__name__)


class DaeModel(ABC):
    """z_c' = h_c, x' = f, 0 = g, z_d(k+1) = h_d, all in physical time."""

    layout: StateLayout

    @abstractmethod
    def f(self, zc, zd: DiscreteState, x, y) -> np.ndarray: ...

    @abstractmethod
    def g(self, zc, zd: DiscreteState, x, y) -> np.ndarray: ...

    @abstractmethod
    def hc(self, zc, zd: DiscreteState, x, y) -> np.ndarray: ...

    def hd(self, state: PartitionedState, now: float) -> DiscreteState:
        return state.zd

    def discrete_instants(self, zd: DiscreteState, t0: float, t1: float) -> List[float]:
        """Instants in (t0, t1] at which h_d may act."""
        return []

    def pending_actions(self, state: PartitionedState) -> List[str]:
        """Discrete actions h_d would still take from ``state``."""
        return []

    def with_event(self, ev: EventSpec) -> "DaeModel":
        raise SpecError(f"{type(self).__name__} has no network to apply {ev.describe()}")

    def instability(self, state: PartitionedState, max_angle_spread_deg: float) -> Optional[str]:
        return None

    # Conveniences over the four partitions

    def residuals(self, state: PartitionedState) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        args = (state.zc, state.zd, state.x, state.y)
        return self.f(*args), self.g(*args), self.hc(*args)

    def residual_norms(self, state: PartitionedState) -> Tuple[float, float, float]:
        return tuple(_inf_norm(r) for r in self.residuals(state))

    def manifold_residual(self, state: PartitionedState) -> float:
        """max(‖f‖∞, ‖g‖∞): distance of ``state`` from the constraint manifold."""
        args = (state.zc, state.zd, state.x, state.y)
        return max(_inf_norm(self.f(*args)), _inf_norm(self.g(*args)))

    def is_fixed_point(self, state: PartitionedState) -> bool:
        return not self.pending_actions(state)

    def initial_state(self) -> PartitionedState:
        raise NotImplementedError(f"{type(self).__name__} has no built-in initial state")

    def make_state(
        self, zc=(), zd: Optional[DiscreteState] = None, x=(), y=(), t=0.0
    ) -> PartitionedState:
        return PartitionedState(
            zc=np.asarray(zc, dtype=float),
            zd=zd if zd is not None else DiscreteState(),
            x=np.asarray(x, dtype=float),
            y=np.asarray(y, dtype=float),
            t=t,
        )


def _inf_norm(v: np.ndarray) -> float:
    return float(np.max(np.abs(v))) if len(v) else 0.0


def system_layout(sys: SystemSpec) -> StateLayout:
    zc = [f"zc.{gv.id}.Pm" for gv in sys.governors]
    for ld in sys.erl_loads:
        zc += [f"zc.{ld.id}.xp", f"zc.{ld.id}.xq"]
    zd = [f"zd.{t.id}.m" for t in sys.ltcs] + [f"zd.{o.id}.active" for o in sys.oxls]
    x = [f"x.{g.id}.{var}" for g in sys.generators for var in GEN_STATES]
    net = [sys.buses[i].id for i in sys.network_indices]
    y = [f"y.{b}.V" for b in net] + [f"y.{b}.theta" for b in net]
    return StateLayout(zc=tuple(zc), zd=tuple(zd), x=tuple(x), y=tuple(y))


class PowerSystemModel(DaeModel):
    """The device and network equations of a SystemSpec under one topology."""

    def __init__(
        self,
        system: SystemSpec,
        overlay: Optional[TopologyOverlay] = None,
        *,
        tables: Optional[DeviceTables] = None,
    ):
        if not system.initialized:
            raise SpecError(
                "system has no back-solved set-points; run initialize_equilibrium first"
            )
        self.system = system
        self.overlay = overlay or TopologyOverlay.from_system(system)
        self.tables = tables or DeviceTables.from_system(system)
        self.layout = system_layout(system)
        self._admittance: Dict[Tuple[float, ...], AdmittanceMatrix] = {}

    def __repr__(self) -> str:
        return f"PowerSystemModel(buses={self.tables.n_bus}, version={self.overlay.topology_version})"

    def admittance(self, zd: DiscreteState) -> AdmittanceMatrix:
        Y = self._admittance.get(zd.taps)
        if Y is None:
            Y = build_admittance(self.system, zd.taps, self.overlay)
            self._admittance[zd.taps] = Y
        return Y

    def use_admittance(self, zd: DiscreteState, admittance: AdmittanceMatrix) -> "PowerSystemModel":
        """A copy whose network matrix for ``zd`` is pinned to ``admittance``."""
        model = PowerSystemModel(self.system, self.overlay, tables=self.tables)
        model._admittance[zd.taps] = admittance
        return model

    def f(self, zc, zd, x, y):
        return fast_rates(self.tables, zc, zd, x, y)

    def g(self, zc, zd, x, y):
        return power_mismatch(self.tables, self.admittance(zd).matrix, zc, x, y)

    def hc(self, zc, zd, x, y):
        return slow_rates(self.tables, zc, zd, x, y)

    def hd(self, state, now):
        return discrete_update(self.tables, state, now)

    def discrete_instants(self, zd, t0, t1):
        tab = self.tables
        instants = []
        for period in set(tab.ltc_period.tolist()):
            k = math.floor(t0 / period + 1e-9) + 1
            while k * period <= t1 + 1e-12:
                instants.append(k * period)
                k += 1
        for k, since in enumerate(zd.oxl_since):
            if since is not None and not zd.oxl_active[k]:
                expiry = since + tab.oxl_delay[k]
                if t0 < expiry <= t1 + 1e-12:
                    instants.append(expiry)
        return sorted(set(instants))

    def pending_actions(self, state):
        return pending_actions(self.tables, state)

    def with_event(self, ev):
        overlay = apply_event(self.overlay, ev, self.system)
        return PowerSystemModel(self.system, overlay, tables=self.tables)

    def instability(self, state, max_angle_spread_deg):
        if not self.tables.n_gen:
            return None
        angles = np.append(state.x.reshape(-1, 4)[:, 0], self.tables.theta_ref)
        spread = math.degrees(float(angles.max() - angles.min()))
        if spread > max_angle_spread_deg:
            return f"loss of synchronism: rotor angle spread {spread:.1f} deg"
        return None


def as_model(
    target: "DaeModel | SystemSpec",
    state: Optional[PartitionedState] = None,
    admittance: Optional[AdmittanceMatrix] = None,
) -> DaeModel:
    """Bind a SystemSpec (or pass a model through), optionally pinning Y."""
    model = target if isinstance(target, DaeModel) else PowerSystemModel(target)
    if admittance is not None and state is not None and isinstance(model, PowerSystemModel):
        model = model.use_admittance(state.zd, admittance)
    return model
