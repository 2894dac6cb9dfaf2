"""
Immutable system and scenario descriptions.

All electrical quantities are per unit on the system base; times are seconds.
Fields that are ``None`` in a freshly parsed system (set-points such as
``AvrParams.v_ref``) are back-solved by the equilibrium initialisation.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple


class BusKind(str, Enum):
    """Power-flow role of a bus."""

    SLACK = "Slack"
    PV = "PV"
    PQ = "PQ"


class BranchStatus(str, Enum):
    CLOSED = "Closed"
    OPEN = "Open"


class EventKind(str, Enum):
    """Scenario event vocabulary."""

    APPLY_FAULT = "ApplyFault"
    CLEAR_FAULT = "ClearFault"
    OPEN_BRANCH = "OpenBranch"
    CLOSE_BRANCH = "CloseBranch"


@dataclass(frozen=True)
class BusSpec:
    id: str
    base_kv: float
    kind: BusKind
    v_set: Optional[float] = None
    p_load: float = 0.0
    q_load: float = 0.0
    theta_set: float = 0.0


@dataclass(frozen=True)
class BranchSpec:
    id: str
    from_bus: str
    to_bus: str
    r: float
    x: float
    b_shunt: float = 0.0
    tap_side: Optional[str] = None
    status: BranchStatus = BranchStatus.CLOSED


@dataclass(frozen=True)
class GenParams:
    """One-axis synchronous machine."""

    id: str
    bus: str
    H: float
    D: float
    x_d: float
    x_d_prime: float
    t_d0_prime: float
    omega_s: float
    p_gen: float = 0.0
    # Mechanical power of a machine without governor (back-solved)
    p_m: Optional[float] = None


@dataclass(frozen=True)
class AvrParams:
    """First-order exciter with output limits."""

    id: str
    gen: str
    k_a: float
    t_e: float
    efd_min: float
    efd_max: float
    v_ref: Optional[float] = None


@dataclass(frozen=True)
class GovParams:
    """First-order turbine governor with droop gain k_g."""

    id: str
    gen: str
    t_g: float
    k_g: float
    p_m0: Optional[float] = None


@dataclass(frozen=True)
class OxlParams:
    """Over-excitation limiter: field ceiling after a sustained violation."""

    id: str
    gen: str
    efd_limit: float
    delay_s: float


@dataclass(frozen=True)
class ErlParams:
    """Exponential-recovery load."""

    id: str
    bus: str
    p0: float
    q0: float
    alpha_s: float
    alpha_t: float
    beta_s: float
    beta_t: float
    t_p: float
    t_q: float
    v0: Optional[float] = None


@dataclass(frozen=True)
class LtcParams:
    """Load tap changer acting on the ratio of one branch."""

    id: str
    branch: str
    m0: float
    delta_m: float
    m_min: float
    m_max: float
    deadband: float
    controlled_bus: str
    period_s: float
    v_ref: Optional[float] = None


@dataclass(frozen=True)
class StaticLoadSpec:
    id: str
    bus: str
    p: float
    q: float


@dataclass(frozen=True)
class SystemSpec:
    """Network and device description; immutable after parsing."""

    buses: Tuple[BusSpec, ...]
    branches: Tuple[BranchSpec, ...] = ()
    generators: Tuple[GenParams, ...] = ()
    avrs: Tuple[AvrParams, ...] = ()
    governors: Tuple[GovParams, ...] = ()
    oxls: Tuple[OxlParams, ...] = ()
    erl_loads: Tuple[ErlParams, ...] = ()
    ltcs: Tuple[LtcParams, ...] = ()
    static_loads: Tuple[StaticLoadSpec, ...] = ()
    schema: int = 1
    base_mva: float = 100.0
    # Constant-impedance load admittance per bus, set by the initialisation
    load_shunts: Optional[Tuple[complex, ...]] = None

    def bus_index(self, bus_id: str) -> int:
        for i, bus in enumerate(self.buses):
            if bus.id == bus_id:
                return i
        raise KeyError(bus_id)

    def branch_index(self, branch_id: str) -> int:
        for i, branch in enumerate(self.branches):
            if branch.id == branch_id:
                return i
        raise KeyError(branch_id)

    def gen_index(self, gen_id: str) -> int:
        for i, gen in enumerate(self.generators):
            if gen.id == gen_id:
                return i
        raise KeyError(gen_id)

    @property
    def slack_indices(self) -> Tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.buses) if b.kind is BusKind.SLACK)

    @property
    def network_indices(self) -> Tuple[int, ...]:
        """Buses whose (V, θ) are algebraic variables."""
        return tuple(i for i, b in enumerate(self.buses) if b.kind is not BusKind.SLACK)

    @property
    def initialized(self) -> bool:
        return self.load_shunts is not None


@dataclass(frozen=True)
class EventSpec:
    time: float
    kind: EventKind
    bus: Optional[str] = None
    branch: Optional[str] = None
    admittance: Optional[complex] = None

    def describe(self) -> str:
        target = self.bus if self.bus is not None else self.branch
        return f"{self.kind.value}({target})"


@dataclass(frozen=True)
class ScenarioSpec:
    t_end: float
    events: Tuple[EventSpec, ...] = field(default_factory=tuple)
    qss_start: Optional[float] = None
