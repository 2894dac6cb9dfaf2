"""
Power flow, device back-solve and equilibrium solves on the partitioned state.
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from ..dae.jacobian import fd_jacobian
from ..dae.model import DaeModel, PowerSystemModel
from ..dae.state import DiscreteState, PartitionedState
from ..exceptions import InfeasibleDeviceInit, NewtonFailure, PowerFlowDiverged
from ..netmodel.network import build_admittance
from ..netmodel.specs import BusKind, SystemSpec
from .newton import NewtonConfig, newton_solve

logger = logging.getLogger(__name__)

# Residual bound for a back-solved initial point
INIT_TOL = 1e-9


@dataclass(frozen=True)
class InitialPoint:
    """Equilibrium state plus the system carrying its back-solved set-points."""

    system: SystemSpec
    state: PartitionedState


def _erl_ratio(v0: Optional[float], V: float) -> float:
    return 1.0 if v0 is None else V / v0


def _bus_demand(
    sys: SystemSpec, V: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Constant-impedance (P, Q) per bus and steady-state ERL (P, Q) per bus."""
    n = len(sys.buses)
    p_static, q_static = np.zeros(n), np.zeros(n)
    for i, bus in enumerate(sys.buses):
        p_static[i] += bus.p_load
        q_static[i] += bus.q_load
    for ld in sys.static_loads:
        i = sys.bus_index(ld.bus)
        p_static[i] += ld.p
        q_static[i] += ld.q

    p_erl, q_erl = np.zeros(n), np.zeros(n)
    for ld in sys.erl_loads:
        i = sys.bus_index(ld.bus)
        ratio = _erl_ratio(ld.v0, V[i])
        p_erl[i] += ld.p0 * ratio**ld.alpha_s
        q_erl[i] += ld.q0 * ratio**ld.beta_s
    return p_static, q_static, p_erl, q_erl


def power_flow(
    sys: SystemSpec, cfg: Optional[NewtonConfig] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Newton power flow from a flat start with constant-power loads.

    Unknowns are θ of every non-slack bus and V of every PQ bus. Returns
    (V, θ) of all buses.
    """
    network = replace(sys, load_shunts=None)
    Y = build_admittance(network).matrix
    n = len(sys.buses)
    net = np.array(sys.network_indices, dtype=int)
    pq = np.array([i for i, b in enumerate(sys.buses) if b.kind is BusKind.PQ], dtype=int)

    V0 = np.array([b.v_set if b.v_set is not None else 1.0 for b in sys.buses])
    th0 = np.array([b.theta_set if b.kind is BusKind.SLACK else 0.0 for b in sys.buses])
    p_gen = np.zeros(n)
    for g in sys.generators:
        p_gen[sys.bus_index(g.bus)] += g.p_gen

    def unpack(v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        V, th = V0.copy(), th0.copy()
        th[net] = v[: len(net)]
        V[pq] = v[len(net):]
        return V, th

    def mismatch(v: np.ndarray) -> np.ndarray:
        V, th = unpack(v)
        Vc = V * np.exp(1j * th)
        S = Vc * np.conj(Y @ Vc)
        p_static, q_static, p_erl, q_erl = _bus_demand(sys, V)
        dp = p_gen - p_static - p_erl - S.real
        dq = -q_static - q_erl - S.imag
        return np.concatenate([dp[net], dq[pq]])

    start = np.concatenate([th0[net], V0[pq]])
    result = newton_solve(mismatch, lambda v: fd_jacobian(mismatch, v), start, cfg)
    if not result.converged:
        raise PowerFlowDiverged(f"power flow did not converge: {result.describe()}")
    V, th = unpack(result.solution)
    if np.any(V <= 0):
        raise PowerFlowDiverged("power flow converged to non-positive voltage magnitudes")
    logger.debug("Power flow converged in %d iterations", result.iterations)
    return V, th


def initialize_equilibrium(sys: SystemSpec, cfg: Optional[NewtonConfig] = None) -> InitialPoint:
    """
    Power flow, then device back-solve so that f = g = h_c = 0 and h_d is at
    a fixed point.
    """
    V, th = power_flow(sys, cfg)
    Vc = V * np.exp(1j * th)
    Y = build_admittance(replace(sys, load_shunts=None)).matrix
    S_net = Vc * np.conj(Y @ Vc)
    p_static, q_static, _, q_erl = _bus_demand(sys, V)

    q_gen_bus = S_net.imag + q_static + q_erl
    machines_at = np.zeros(len(sys.buses))
    for g in sys.generators:
        machines_at[sys.bus_index(g.bus)] += 1

    avr_of = {a.gen: a for a in sys.avrs}
    gov_of = {gv.gen: gv for gv in sys.governors}
    oxl_of = {o.gen: o for o in sys.oxls}

    generators, avrs, governors, x = [], [], [], []
    for g in sys.generators:
        b = sys.bus_index(g.bus)
        q = q_gen_bus[b] / machines_at[b]
        current = np.conj((g.p_gen + 1j * q) / Vc[b])
        emf = Vc[b] + 1j * g.x_d_prime * current
        delta, eqp = float(np.angle(emf)), float(np.abs(emf))
        angle = delta - th[b]
        i_d = (eqp - V[b] * np.cos(angle)) / g.x_d_prime
        p_e = eqp * V[b] * np.sin(angle) / g.x_d_prime
        efd = eqp + (g.x_d - g.x_d_prime) * i_d

        avr = avr_of[g.id]
        if not avr.efd_min <= efd <= avr.efd_max:
            raise InfeasibleDeviceInit(
                f"generator '{g.id}': required E_fd {efd:.4f} outside "
                f"[{avr.efd_min:g}, {avr.efd_max:g}]"
            )
        oxl = oxl_of.get(g.id)
        if oxl is not None and efd > oxl.efd_limit:
            raise InfeasibleDeviceInit(
                f"generator '{g.id}': required E_fd {efd:.4f} above OXL limit {oxl.efd_limit:g}"
            )

        avrs.append(replace(avr, v_ref=float(V[b] + efd / avr.k_a)))
        gov = gov_of.get(g.id)
        if gov is None:
            generators.append(replace(g, p_m=float(p_e)))
        else:
            generators.append(replace(g, p_m=None))
            governors.append((gov, float(p_e)))
        x.extend([delta, 1.0, eqp, efd])

    # Governors keep system order; z_c holds their P_m
    p_m_of = {gov.id: pm for gov, pm in governors}
    new_govs = tuple(replace(gv, p_m0=p_m_of[gv.id]) for gv in sys.governors)
    zc = [p_m_of[gv.id] for gv in sys.governors]

    erls = []
    for ld in sys.erl_loads:
        Vb = V[sys.bus_index(ld.bus)]
        v0 = Vb if ld.v0 is None else ld.v0
        ratio = Vb / v0
        erls.append(replace(ld, v0=float(v0)))
        zc.append(ld.p0 * ratio**ld.alpha_s - ld.p0 * ratio**ld.alpha_t)
        zc.append(ld.q0 * ratio**ld.beta_s - ld.q0 * ratio**ld.beta_t)

    ltcs = []
    for t in sys.ltcs:
        v = V[sys.bus_index(t.controlled_bus)]
        if t.v_ref is None:
            ltcs.append(replace(t, v_ref=float(v)))
            continue
        if abs(v - t.v_ref) > t.deadband:
            raise InfeasibleDeviceInit(
                f"LTC '{t.id}': initial voltage {v:.4f} outside the deadband "
                f"{t.v_ref:g} ± {t.deadband:g}"
            )
        ltcs.append(t)

    shunts = tuple(complex((p_static[i] - 1j * q_static[i]) / V[i] ** 2) for i in range(len(V)))
    system = replace(
        sys,
        generators=tuple(generators),
        avrs=tuple(avrs),
        governors=new_govs,
        erl_loads=tuple(erls),
        ltcs=tuple(ltcs),
        load_shunts=shunts,
    )

    net = list(sys.network_indices)
    state = PartitionedState(
        zc=np.array(zc, dtype=float),
        zd=DiscreteState(
            taps=tuple(float(t.m0) for t in sys.ltcs),
            oxl_active=tuple(False for _ in sys.oxls),
            oxl_since=tuple(None for _ in sys.oxls),
        ),
        x=np.array(x, dtype=float),
        y=np.concatenate([V[net], th[net]]),
        t=0.0,
    )

    model = PowerSystemModel(system)
    norms = model.residual_norms(state)
    if max(norms) > INIT_TOL:
        raise InfeasibleDeviceInit(
            "back-solved point is not an equilibrium "
            f"(|f| = {norms[0]:.2e}, |g| = {norms[1]:.2e}, |h_c| = {norms[2]:.2e})"
        )
    pending = model.pending_actions(state)
    if pending:
        raise InfeasibleDeviceInit("discrete devices would act at t=0: " + "; ".join(pending))

    logger.info(
        "Initial equilibrium: %d buses, %d generators, min V = %.4f",
        len(sys.buses),
        len(sys.generators),
        float(V.min()),
    )
    return InitialPoint(system=system, state=state)


_PARTS = ("zc", "x", "y")


def _newton_on(
    model: DaeModel,
    state: PartitionedState,
    parts: Sequence[str],
    equations: Sequence[str],
    cfg: Optional[NewtonConfig],
    label: str,
) -> PartitionedState:
    zd = state.zd
    sizes = {name: len(getattr(state, name)) for name in _PARTS}
    if sum(sizes[p] for p in parts) == 0:
        return state

    def assemble(v: np.ndarray) -> dict:
        values = {name: getattr(state, name) for name in _PARTS}
        offset = 0
        for p in parts:
            values[p] = v[offset : offset + sizes[p]]
            offset += sizes[p]
        return values

    def residual(v: np.ndarray) -> np.ndarray:
        a = assemble(v)
        args = (a["zc"], zd, a["x"], a["y"])
        families = {"hc": model.hc, "f": model.f, "g": model.g}
        return np.concatenate([families[e](*args) for e in equations])

    v0 = np.concatenate([getattr(state, p) for p in parts])
    result = newton_solve(residual, lambda v: fd_jacobian(residual, v), v0, cfg)
    if not result.converged:
        raise NewtonFailure(f"{label} failed at t={state.t:g}: {result.describe()}", result)
    a = assemble(result.solution)
    return state.with_continuous(zc=a["zc"], x=a["x"], y=a["y"])


def solve_long_term_equilibrium(
    model: DaeModel, guess: PartitionedState, cfg: Optional[NewtonConfig] = None
) -> PartitionedState:
    """Solve h_c = 0, f = 0, g = 0 for (z_c, x, y) with z_d fixed."""
    return _newton_on(model, guess, _PARTS, ("hc", "f", "g"), cfg, "long-term equilibrium")


def project_to_manifold(
    model: DaeModel, state: PartitionedState, cfg: Optional[NewtonConfig] = None
) -> PartitionedState:
    """Solve f = 0, g = 0 for (x, y) with (z_c, z_d) fixed."""
    return _newton_on(model, state, ("x", "y"), ("f", "g"), cfg, "manifold projection")


def solve_algebraic(
    model: DaeModel, state: PartitionedState, cfg: Optional[NewtonConfig] = None
) -> PartitionedState:
    """Solve g = 0 for y with everything else fixed."""
    return _newton_on(model, state, ("y",), ("g",), cfg, "algebraic solve")
