"""
Device and network equations of the power system.

f: one-axis generators with first-order AVR (fast, x)
g: bus power balance (algebraic, y)
h_c: first-order governors and exponential-recovery loads (slow, z_c)
h_d: load tap changers and over-excitation limiters (discrete, z_d)

Parameter arrays are gathered once per system in DeviceTables; every
evaluation is vectorised over devices.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..netmodel.network import AdmittanceMatrix
from ..netmodel.specs import SystemSpec
from .state import DiscreteState, PartitionedState

GEN_STATES = ("delta", "omega", "Eqp", "Efd")

# Relative tolerance when testing whether a time is a sampling instant
_INSTANT_TOL = 1e-9


def _arr(values, dtype=float) -> np.ndarray:
    return np.array(list(values), dtype=dtype)


def _opt(value: Optional[float]) -> float:
    return math.nan if value is None else value


@dataclass(frozen=True, eq=False)
class DeviceTables:
    """Per-device parameter arrays and index maps of one SystemSpec."""

    sys: SystemSpec
    n_bus: int
    net: np.ndarray            # non-slack bus indices, y order
    v_fixed: np.ndarray        # slack magnitudes (0 elsewhere)
    th_fixed: np.ndarray
    theta_ref: float
    # generators
    gen_bus: np.ndarray
    H: np.ndarray
    D: np.ndarray
    xd: np.ndarray
    xdp: np.ndarray
    td0p: np.ndarray
    ws: np.ndarray
    pm_fixed: np.ndarray
    ka: np.ndarray
    te: np.ndarray
    vref: np.ndarray
    efd_min: np.ndarray
    efd_max: np.ndarray
    # governors
    gov_gen: np.ndarray
    tg: np.ndarray
    kg: np.ndarray
    pm0: np.ndarray
    # over-excitation limiters
    oxl_gen: np.ndarray
    oxl_limit: np.ndarray
    oxl_delay: np.ndarray
    # exponential-recovery loads
    erl_bus: np.ndarray
    p0: np.ndarray
    q0: np.ndarray
    v0: np.ndarray
    alpha_s: np.ndarray
    alpha_t: np.ndarray
    beta_s: np.ndarray
    beta_t: np.ndarray
    tp: np.ndarray
    tq: np.ndarray
    # load tap changers
    ltc_bus: np.ndarray
    ltc_step: np.ndarray
    ltc_min: np.ndarray
    ltc_max: np.ndarray
    ltc_vref: np.ndarray
    ltc_band: np.ndarray
    ltc_period: np.ndarray

    @classmethod
    def of(cls, sys: "SystemSpec | DeviceTables") -> "DeviceTables":
        return sys if isinstance(sys, DeviceTables) else cls.from_system(sys)

    @classmethod
    def from_system(cls, sys: SystemSpec) -> "DeviceTables":
        n_bus = len(sys.buses)
        v_fixed = np.zeros(n_bus)
        th_fixed = np.zeros(n_bus)
        for i in sys.slack_indices:
            v_fixed[i] = sys.buses[i].v_set
            th_fixed[i] = sys.buses[i].theta_set
        theta_ref = th_fixed[sys.slack_indices[0]] if sys.slack_indices else 0.0

        gens = sys.generators
        avr_of = {a.gen: a for a in sys.avrs}
        avrs = [avr_of[g.id] for g in gens]

        return cls(
            sys=sys,
            n_bus=n_bus,
            net=_arr(sys.network_indices, int),
            v_fixed=v_fixed,
            th_fixed=th_fixed,
            theta_ref=theta_ref,
            gen_bus=_arr((sys.bus_index(g.bus) for g in gens), int),
            H=_arr(g.H for g in gens),
            D=_arr(g.D for g in gens),
            xd=_arr(g.x_d for g in gens),
            xdp=_arr(g.x_d_prime for g in gens),
            td0p=_arr(g.t_d0_prime for g in gens),
            ws=_arr(g.omega_s for g in gens),
            pm_fixed=_arr(_opt(g.p_m) for g in gens),
            ka=_arr(a.k_a for a in avrs),
            te=_arr(a.t_e for a in avrs),
            vref=_arr(_opt(a.v_ref) for a in avrs),
            efd_min=_arr(a.efd_min for a in avrs),
            efd_max=_arr(a.efd_max for a in avrs),
            gov_gen=_arr((sys.gen_index(gv.gen) for gv in sys.governors), int),
            tg=_arr(gv.t_g for gv in sys.governors),
            kg=_arr(gv.k_g for gv in sys.governors),
            pm0=_arr(_opt(gv.p_m0) for gv in sys.governors),
            oxl_gen=_arr((sys.gen_index(o.gen) for o in sys.oxls), int),
            oxl_limit=_arr(o.efd_limit for o in sys.oxls),
            oxl_delay=_arr(o.delay_s for o in sys.oxls),
            erl_bus=_arr((sys.bus_index(ld.bus) for ld in sys.erl_loads), int),
            p0=_arr(ld.p0 for ld in sys.erl_loads),
            q0=_arr(ld.q0 for ld in sys.erl_loads),
            v0=_arr(_opt(ld.v0) for ld in sys.erl_loads),
            alpha_s=_arr(ld.alpha_s for ld in sys.erl_loads),
            alpha_t=_arr(ld.alpha_t for ld in sys.erl_loads),
            beta_s=_arr(ld.beta_s for ld in sys.erl_loads),
            beta_t=_arr(ld.beta_t for ld in sys.erl_loads),
            tp=_arr(ld.t_p for ld in sys.erl_loads),
            tq=_arr(ld.t_q for ld in sys.erl_loads),
            ltc_bus=_arr((sys.bus_index(t.controlled_bus) for t in sys.ltcs), int),
            ltc_step=_arr(t.delta_m for t in sys.ltcs),
            ltc_min=_arr(t.m_min for t in sys.ltcs),
            ltc_max=_arr(t.m_max for t in sys.ltcs),
            ltc_vref=_arr(_opt(t.v_ref) for t in sys.ltcs),
            ltc_band=_arr(t.deadband for t in sys.ltcs),
            ltc_period=_arr(t.period_s for t in sys.ltcs),
        )

    @property
    def n_gen(self) -> int:
        return len(self.gen_bus)

    @property
    def n_gov(self) -> int:
        return len(self.gov_gen)

    @property
    def n_erl(self) -> int:
        return len(self.erl_bus)

    @property
    def n_net(self) -> int:
        return len(self.net)

    def bus_voltages(self, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Magnitudes and angles of every bus (slack values are fixed)."""
        V = self.v_fixed.copy()
        th = self.th_fixed.copy()
        n = self.n_net
        V[self.net] = y[:n]
        th[self.net] = y[n:]
        return V, th

    def mechanical_power(self, zc: np.ndarray) -> np.ndarray:
        pm = self.pm_fixed.copy()
        pm[self.gov_gen] = zc[: self.n_gov]
        return pm

    def ceiling(self, zd: DiscreteState) -> np.ndarray:
        """Field-voltage ceiling per generator under the current OXL status."""
        ceiling = self.efd_max.copy()
        for k, active in enumerate(zd.oxl_active):
            if active:
                g = self.oxl_gen[k]
                ceiling[g] = min(ceiling[g], self.oxl_limit[k])
        return ceiling


def machine_terms(tab: DeviceTables, x: np.ndarray, V: np.ndarray, th: np.ndarray):
    """Stator interface of X_q = X'_d machines: (I_d, P_e, Q_e)."""
    X = x.reshape(-1, 4)
    delta, eqp = X[:, 0], X[:, 2]
    Vg = V[tab.gen_bus]
    angle = delta - th[tab.gen_bus]
    cos, sin = np.cos(angle), np.sin(angle)
    i_d = (eqp - Vg * cos) / tab.xdp
    p_e = eqp * Vg * sin / tab.xdp
    q_e = (eqp * Vg * cos - Vg**2) / tab.xdp
    return i_d, p_e, q_e


def fast_rates(tab: DeviceTables, zc, zd: DiscreteState, x, y) -> np.ndarray:
    if tab.n_gen == 0:
        return np.zeros(0)
    V, th = tab.bus_voltages(y)
    X = x.reshape(-1, 4)
    omega, eqp, efd = X[:, 1], X[:, 2], X[:, 3]
    i_d, p_e, _ = machine_terms(tab, x, V, th)
    pm = tab.mechanical_power(zc)

    rates = np.empty_like(X)
    rates[:, 0] = tab.ws * (omega - 1.0)
    rates[:, 1] = (pm - p_e - tab.D * (omega - 1.0)) / (2.0 * tab.H)
    rates[:, 2] = (-eqp - (tab.xd - tab.xdp) * i_d + efd) / tab.td0p

    drive = (-efd + tab.ka * (tab.vref - V[tab.gen_bus])) / tab.te
    # Continuous windup limits: the rate fades to zero on the ceiling and
    # pulls E_fd back when the ceiling drops below it
    rate = np.minimum(drive, (tab.ceiling(zd) - efd) / tab.te)
    rates[:, 3] = np.maximum(rate, (tab.efd_min - efd) / tab.te)
    return rates.reshape(-1)


def load_demand(tab: DeviceTables, zc, V: np.ndarray):
    """ERL demand P_d = x_p + P0 (V/V0)^α_t and Q_d alike."""
    xs = zc[tab.n_gov :].reshape(-1, 2)
    ratio = np.abs(V[tab.erl_bus]) / tab.v0
    p_d = xs[:, 0] + tab.p0 * ratio**tab.alpha_t
    q_d = xs[:, 1] + tab.q0 * ratio**tab.beta_t
    return p_d, q_d


def power_mismatch(tab: DeviceTables, Y: np.ndarray, zc, x, y) -> np.ndarray:
    V, th = tab.bus_voltages(y)
    Vc = V * np.exp(1j * th)
    S_net = Vc * np.conj(Y @ Vc)

    P = np.zeros(tab.n_bus)
    Q = np.zeros(tab.n_bus)
    if tab.n_gen:
        _, p_e, q_e = machine_terms(tab, x, V, th)
        np.add.at(P, tab.gen_bus, p_e)
        np.add.at(Q, tab.gen_bus, q_e)
    if tab.n_erl:
        p_d, q_d = load_demand(tab, zc, V)
        np.add.at(P, tab.erl_bus, -p_d)
        np.add.at(Q, tab.erl_bus, -q_d)

    mis = (P - S_net.real)[tab.net], (Q - S_net.imag)[tab.net]
    return np.concatenate(mis)


def slow_rates(tab: DeviceTables, zc, zd: DiscreteState, x, y) -> np.ndarray:
    out = np.empty(tab.n_gov + 2 * tab.n_erl)
    if tab.n_gov:
        omega = x.reshape(-1, 4)[tab.gov_gen, 1]
        pm = zc[: tab.n_gov]
        out[: tab.n_gov] = (-pm + tab.pm0 - tab.kg * (omega - 1.0)) / tab.tg
    if tab.n_erl:
        V, _ = tab.bus_voltages(y)
        xs = zc[tab.n_gov :].reshape(-1, 2)
        ratio = np.abs(V[tab.erl_bus]) / tab.v0
        dxp = (-xs[:, 0] + tab.p0 * ratio**tab.alpha_s - tab.p0 * ratio**tab.alpha_t) / tab.tp
        dxq = (-xs[:, 1] + tab.q0 * ratio**tab.beta_s - tab.q0 * ratio**tab.beta_t) / tab.tq
        out[tab.n_gov :] = np.column_stack([dxp, dxq]).reshape(-1)
    return out


def is_instant(now: float, period: float) -> bool:
    k = round(now / period)
    return k >= 1 and abs(now - k * period) <= _INSTANT_TOL * max(1.0, abs(now))


def ltc_rule(m: float, v: float, v_ref: float, band: float, step: float,
             m_min: float, m_max: float) -> float:
    """Tap update with deadband [v_ref - band, v_ref + band]."""
    if v > v_ref + band and m < m_max:
        return min(m + step, m_max)
    if v < v_ref - band and m > m_min:
        return max(m - step, m_min)
    return m


def discrete_update(tab: DeviceTables, state: PartitionedState, now: float) -> DiscreteState:
    zd = state.zd
    V, _ = tab.bus_voltages(state.y)

    taps = list(zd.taps)
    for i, m in enumerate(taps):
        if is_instant(now, tab.ltc_period[i]):
            taps[i] = ltc_rule(
                m, V[tab.ltc_bus[i]], tab.ltc_vref[i], tab.ltc_band[i],
                tab.ltc_step[i], tab.ltc_min[i], tab.ltc_max[i],
            )

    active = list(zd.oxl_active)
    since = list(zd.oxl_since)
    if len(active):
        efd = state.x.reshape(-1, 4)[:, 3]
        for k in range(len(active)):
            if active[k]:
                since[k] = None
                continue
            if efd[tab.oxl_gen[k]] > tab.oxl_limit[k]:
                if since[k] is None:
                    since[k] = now
                if now - since[k] >= tab.oxl_delay[k] - _INSTANT_TOL * max(1.0, now):
                    active[k] = True
                    since[k] = None
            else:
                since[k] = None

    return DiscreteState(taps=tuple(taps), oxl_active=tuple(active), oxl_since=tuple(since))


def pending_actions(tab: DeviceTables, state: PartitionedState) -> list:
    """Discrete actions that would still occur from ``state`` (empty at a fixed point)."""
    V, _ = tab.bus_voltages(state.y)
    pending = []
    for i, m in enumerate(state.zd.taps):
        m_new = ltc_rule(
            m, V[tab.ltc_bus[i]], tab.ltc_vref[i], tab.ltc_band[i],
            tab.ltc_step[i], tab.ltc_min[i], tab.ltc_max[i],
        )
        if m_new != m:
            pending.append(f"{tab.sys.ltcs[i].id} would move {m:g} -> {m_new:g}")
    if len(state.zd.oxl_active):
        efd = state.x.reshape(-1, 4)[:, 3]
        for k, active in enumerate(state.zd.oxl_active):
            if not active and efd[tab.oxl_gen[k]] > tab.oxl_limit[k]:
                pending.append(f"{tab.sys.oxls[k].id} field above limit")
    return pending


# Operations on a SystemSpec -------------------------------------------------


def eval_f(sys: "SystemSpec | DeviceTables", state: PartitionedState) -> np.ndarray:
    """Rates of the fast states (δ, ω, E'_q, E_fd per generator)."""
    return fast_rates(DeviceTables.of(sys), state.zc, state.zd, state.x, state.y)


def eval_g(
    sys: "SystemSpec | DeviceTables",
    state: PartitionedState,
    admittance: AdmittanceMatrix,
) -> np.ndarray:
    """Active then reactive power mismatch at every non-slack bus."""
    return power_mismatch(
        DeviceTables.of(sys), admittance.matrix, state.zc, state.x, state.y
    )


def eval_hc(sys: "SystemSpec | DeviceTables", state: PartitionedState) -> np.ndarray:
    """Rates of the slow continuous states (governor P_m, ERL x_p/x_q)."""
    return slow_rates(DeviceTables.of(sys), state.zc, state.zd, state.x, state.y)


def step_hd(sys: "SystemSpec | DeviceTables", state: PartitionedState, now: float) -> DiscreteState:
    """Discrete map at ``now``: LTCs sampled at their instants, OXL timers."""
    return discrete_update(DeviceTables.of(sys), state, now)
