from dataclasses import replace

import numpy as np
import pytest
import scipy.linalg
from numpy.testing import assert_allclose

from qssaudit.dae.fixtures import LinearDae, scalar_fast, two_timescale
from qssaudit.dae.jacobian import (
    fd_jacobian,
    jacobian_blocks,
    reduced_fast_jacobian,
    reduced_slow_jacobian,
)
from qssaudit.dae.model import PowerSystemModel, system_layout
from qssaudit.dae.residuals import eval_f, eval_g, eval_hc, ltc_rule, step_hd
from qssaudit.dae.spectrum import GammaS, eigenvalues, gamma_s_membership
from qssaudit.dae.state import DiscreteState
from qssaudit.exceptions import NotOnManifold, SingularAlgebraic, SpecError


def test_layout_names(benign_system):
    layout = system_layout(benign_system)
    assert layout.zc == ("zc.L3.xp", "zc.L3.xq")
    assert layout.zd == ("zd.T1.m", "zd.X1.active")
    assert layout.x == ("x.G1.delta", "x.G1.omega", "x.G1.Eqp", "x.G1.Efd")
    assert layout.y == ("y.B2.V", "y.B3.V", "y.B2.theta", "y.B3.theta")
    assert layout.index("x.G1.delta") == 4


def test_state_arrays_are_read_only(benign_start):
    state = benign_start.state
    with pytest.raises(ValueError):
        state.x[0] = 1.0
    moved = state.with_continuous(t=5.0)
    assert moved.t == 5.0
    assert state.t == 0.0
    assert moved.zd == state.zd


def test_model_needs_initialized_system(benign_system):
    with pytest.raises(SpecError, match="initialize_equilibrium"):
        PowerSystemModel(benign_system)


def test_residuals_vanish_at_equilibrium(benign_start):
    system, state = benign_start.system, benign_start.state
    model = PowerSystemModel(system)
    assert np.max(np.abs(eval_f(system, state))) <= 1e-9
    assert np.max(np.abs(eval_g(system, state, model.admittance(state.zd)))) <= 1e-9
    assert np.max(np.abs(eval_hc(system, state))) <= 1e-9
    assert step_hd(system, state, 5.0) == state.zd


def test_tap_move_breaks_power_balance(benign_start):
    model = PowerSystemModel(benign_start.system)
    state = benign_start.state
    moved = state.with_zd(replace(state.zd, taps=(0.9875,)))
    assert np.max(np.abs(model.g(moved.zc, moved.zd, moved.x, moved.y))) > 1e-4


def test_ltc_acts_only_at_sampling_instants(benign_start):
    system, state = benign_start.system, benign_start.state
    ltc = replace(system.ltcs[0], v_ref=system.ltcs[0].v_ref - 0.1)
    shifted = replace(system, ltcs=(ltc,))
    assert step_hd(shifted, state, 2.5).taps == (1.0,)
    assert step_hd(shifted, state, 5.0).taps == (1.0 + ltc.delta_m,)

    model = PowerSystemModel(shifted)
    assert model.pending_actions(state) == ["T1 would move 1 -> 1.005"]
    assert model.discrete_instants(state.zd, 0.0, 12.0) == [5.0, 10.0]


def test_oxl_activates_after_delay(benign_start):
    system, state = benign_start.system, benign_start.state
    oxl = system.oxls[0]
    x = state.x.copy()
    x[3] = oxl.efd_limit + 0.1
    hot = state.with_continuous(x=x)

    zd = step_hd(system, hot, 1.0)
    assert zd.oxl_active == (False,)
    assert zd.oxl_since == (1.0,)
    model = PowerSystemModel(system)
    assert 1.0 + oxl.delay_s in model.discrete_instants(zd, 1.0, 1.0 + oxl.delay_s)

    zd = step_hd(system, hot.with_zd(zd), 1.0 + oxl.delay_s)
    assert zd.oxl_active == (True,)
    assert zd.oxl_since == (None,)
    # the field ceiling drops to the limit once active
    assert model.tables.ceiling(zd)[0] == pytest.approx(oxl.efd_limit)
    assert model.tables.ceiling(state.zd)[0] == pytest.approx(system.avrs[0].efd_max)


def test_oxl_timer_resets_when_field_recovers(benign_start):
    system, state = benign_start.system, benign_start.state
    zd = replace(state.zd, oxl_since=(1.0,))
    assert step_hd(system, state.with_zd(zd), 2.0).oxl_since == (None,)


def test_tap_rule_is_idempotent_inside_deadband(benign_start):
    system, state = benign_start.system, benign_start.state
    band = system.ltcs[0].deadband
    for offset in (-0.9 * band, 0.0, 0.9 * band):
        y = state.y.copy()
        y[1] += offset
        near = state.with_continuous(y=y)
        once = step_hd(system, near, 5.0)
        twice = step_hd(system, near.with_zd(once), 5.0)
        assert once == twice == state.zd


@pytest.mark.parametrize(
    "v, m, expected",
    [
        (1.05, 1.00, 1.01),
        (0.95, 1.00, 0.99),
        (1.01, 1.00, 1.00),
        (1.05, 1.10, 1.10),
        (0.90, 0.90, 0.90),
        (1.05, 1.095, 1.10),
    ],
)
def test_ltc_rule_cases(v, m, expected):
    assert ltc_rule(m, v, 1.0, 0.02, 0.01, 0.9, 1.1) == pytest.approx(expected)


def test_ltc_rule_random_sequences():
    rng = np.random.default_rng(13)
    m_min, m_max, step, band, v_ref = 0.9, 1.1, 0.0125, 0.01, 1.0
    for _ in range(10_000):
        m = rng.uniform(m_min, m_max)
        for v in rng.uniform(0.85, 1.15, size=5):
            m_new = ltc_rule(m, v, v_ref, band, step, m_min, m_max)
            assert m_min <= m_new <= m_max
            assert abs(m_new - m) <= step + 1e-15
            if abs(v - v_ref) <= band:
                assert m_new == m
            elif v > v_ref + band:
                assert m_new >= m
            else:
                assert m_new <= m
            m = m_new


def test_fd_jacobian_of_linear_map():
    A = np.array([[1.0, -2.0, 0.5], [3.0, 0.0, 4.0]])
    J = fd_jacobian(lambda v: A @ v, np.array([0.3, -1.0, 2.0]))
    assert_allclose(J, A, atol=1e-6)


def test_jacobian_blocks_of_linear_fixture():
    dae = LinearDae(
        n_zc=1, n_x=2, n_y=1,
        f_zc=[[1.0], [2.0]], f_x=[[-3.0, 1.0], [0.0, -4.0]], f_y=[[0.5], [-1.0]],
        g_zc=[[0.2]], g_x=[[1.0, 1.0]], g_y=[[2.0]],
        h_zc=[[-0.1]], h_x=[[0.0, 0.3]], h_y=[[0.7]],
    )
    blocks = jacobian_blocks(dae, dae.initial_state())
    for name in ("f_zc", "f_x", "f_y", "g_zc", "g_x", "g_y", "h_zc", "h_x", "h_y"):
        assert_allclose(getattr(blocks, name), getattr(dae, name), atol=1e-5)


def test_jacobian_columns_match_residual_differences(benign_start):
    model = PowerSystemModel(benign_start.system)
    rng = np.random.default_rng(17)
    sep = benign_start.state
    layout = model.layout

    def stacked(v):
        zc, x, y = layout.split(v)
        return np.concatenate([
            model.f(zc, sep.zd, x, y), model.g(zc, sep.zd, x, y), model.hc(zc, sep.zd, x, y)
        ])

    for _ in range(3):
        v0 = sep.vector() + rng.uniform(-0.02, 0.02, size=len(sep.vector()))
        zc, x, y = layout.split(v0)
        state = sep.with_continuous(zc=zc, x=x, y=y)
        b = jacobian_blocks(model, state)
        J = np.block([
            [b.f_zc, b.f_x, b.f_y],
            [b.g_zc, b.g_x, b.g_y],
            [b.h_zc, b.h_x, b.h_y],
        ])
        r0 = stacked(v0)
        for i in range(len(v0)):
            h = 1e-6 * max(1.0, abs(v0[i]))
            v = v0.copy()
            v[i] += h
            assert_allclose(J[:, i], (stacked(v) - r0) / h, rtol=1e-3, atol=1e-4)


def test_reduced_jacobians_of_two_timescale(tts):
    blocks = jacobian_blocks(tts, tts.initial_state())
    assert_allclose(reduced_fast_jacobian(blocks), [[-1.0 / tts.eps]], rtol=1e-5)
    assert_allclose(reduced_slow_jacobian(blocks), [[-0.5]], rtol=1e-5)


def test_reduced_fast_jacobian_rejects_singular_gy():
    dae = scalar_fast(a=-1.0, b=1.0, p=1.0, q=0.0)
    with pytest.raises(SingularAlgebraic):
        reduced_fast_jacobian(jacobian_blocks(dae, dae.initial_state()))


def test_eigenvalues_sorted():
    result = eigenvalues([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, -2.0]])
    assert result.eigenvalues[0] == pytest.approx(-2.0)
    assert result.eigenvalues[1] == pytest.approx(-1j)
    assert result.eigenvalues[2] == pytest.approx(1j)
    assert result.max_real_part == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError, match="square"):
        eigenvalues(np.ones((2, 3)))


def test_eigenvalues_match_polynomial_roots():
    rng = np.random.default_rng(5)
    for _ in range(20):
        coeffs = np.concatenate([[1.0], rng.normal(size=5)])
        result = eigenvalues(scipy.linalg.companion(coeffs))
        roots = np.roots(coeffs)
        assert len(result.eigenvalues) == 5
        for lam in result.eigenvalues:
            assert np.min(np.abs(roots - lam)) <= 1e-6 * max(1.0, abs(lam))
        assert result.max_real_part == pytest.approx(np.max(roots.real), abs=1e-6)


def test_gamma_s_matches_reduced_eigenvalue_sign():
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 100:
        a, b, p, q = rng.uniform(-2.0, 2.0, size=4)
        eps = rng.choice([1.0, 0.1, 0.01])
        if abs(q) < 0.1:
            continue
        reduced = (a - b * p / q) / eps
        if abs(reduced) < 1e-3:
            continue
        dae = scalar_fast(a, b, p, q, eps)
        result = gamma_s_membership(dae, dae.initial_state())
        assert result.max_real_part == pytest.approx(reduced, rel=1e-4, abs=1e-6)
        expected = GammaS.IN_GAMMA_S if reduced < 0 else GammaS.UNSTABLE_FAST
        assert result.status is expected
        checked += 1


def test_gamma_s_singular_algebraic():
    dae = scalar_fast(a=-1.0, b=1.0, p=1.0, q=0.0)
    result = gamma_s_membership(dae, dae.initial_state())
    assert result.status is GammaS.SINGULAR_ALGEBRAIC
    assert not result.inside


def test_gamma_s_requires_manifold_point(tts):
    state = tts.initial_state()
    off = state.with_continuous(x=state.x + 1e-3)
    with pytest.raises(NotOnManifold):
        gamma_s_membership(tts, off)


def test_gamma_s_at_power_system_equilibrium(benign_start):
    result = gamma_s_membership(benign_start.system, benign_start.state)
    assert result.status is GammaS.IN_GAMMA_S
    assert len(result.spectrum.eigenvalues) == 4
    assert result.condition < 1e6


def test_discrete_state_vector_and_description():
    before = DiscreteState(taps=(1.0,), oxl_active=(False,), oxl_since=(None,))
    after = DiscreteState(taps=(0.9875,), oxl_active=(True,), oxl_since=(None,))
    names = ("zd.T1.m", "zd.X1.active")
    assert_allclose(after.as_vector(), [0.9875, 1.0])
    assert after.as_dict(names) == {"zd.T1.m": 0.9875, "zd.X1.active": True}
    assert before.describe_change(after, names) == (
        "zd.T1.m: 1 -> 0.9875; zd.X1.active: 0 -> 1"
    )


def test_two_timescale_exact_solution_starts_at_initial_state():
    dae = two_timescale(eps=0.01, z0=2.0)
    assert_allclose(dae.exact(0.0), [2.0, 1.0, 1.0])
    assert dae.reduced(2.0) == pytest.approx(2.0 * np.exp(-1.0))
