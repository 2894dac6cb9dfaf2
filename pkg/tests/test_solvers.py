import math
from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qssaudit.dae.model import PowerSystemModel
from qssaudit.exceptions import (
    InfeasibleDeviceInit,
    PowerFlowDiverged,
    SingularMatrix,
    SpecError,
)
from qssaudit.solvers.equilibrium import (
    initialize_equilibrium,
    power_flow,
    project_to_manifold,
    solve_long_term_equilibrium,
)
from qssaudit.solvers.linear import factorize, solve_linear
from qssaudit.solvers.newton import NewtonConfig, NewtonStatus, newton_solve


def test_newton_converges_quadratically():
    result = newton_solve(
        lambda v: np.array([v[0] ** 2 - 2.0]),
        lambda v: np.array([[2.0 * v[0]]]),
        [1.0],
    )
    assert result.status is NewtonStatus.CONVERGED
    # |r| <= 1e-10 bounds the error by 1e-10 / f'(x)
    assert result.solution[0] == pytest.approx(math.sqrt(2.0), abs=1e-10)
    assert result.iterations <= 6
    assert result.final_residual_norm <= 1e-10


def test_newton_finds_root_of_quadratic():
    result = newton_solve(
        lambda v: np.array([v[0] ** 2 - 4.0]),
        lambda v: np.array([[2.0 * v[0]]]),
        [3.0],
    )
    assert result.converged
    assert result.solution[0] == pytest.approx(2.0, abs=1e-10)
    assert result.final_residual_norm <= 1e-10


def test_newton_reports_singular_start():
    result = newton_solve(
        lambda v: np.array([v[0] ** 2 + 1.0]),
        lambda v: np.array([[2.0 * v[0]]]),
        [0.0],
    )
    assert result.status is NewtonStatus.SINGULAR_JACOBIAN
    assert not result.converged


def test_newton_stops_when_jacobian_turns_singular():
    # the first step from x = 1 lands exactly on x = 0, where 2x vanishes
    result = newton_solve(
        lambda v: np.array([v[0] ** 2 + 1.0]),
        lambda v: np.array([[2.0 * v[0]]]),
        [1.0],
    )
    assert result.status is NewtonStatus.SINGULAR_JACOBIAN
    assert result.iterations == 1
    assert result.solution[0] == 0.0
    assert result.condition_estimate == math.inf


def test_newton_gives_up_after_max_iter():
    # no real root
    result = newton_solve(
        lambda v: np.array([v[0] ** 2 + 1.0]),
        lambda v: np.array([[2.0 * v[0]]]),
        [3.0],
        NewtonConfig(max_iter=5),
    )
    assert result.status in (NewtonStatus.MAX_ITER_EXCEEDED, NewtonStatus.DIVERGED)
    assert result.iterations <= 5


def _circle_and_hyperbola(v):
    return np.array([v[0] ** 2 + v[1] ** 2 - 5.0, v[0] * v[1] - 2.0])


def _circle_and_hyperbola_jacobian(v):
    return np.array([[2.0 * v[0], 2.0 * v[1]], [v[1], v[0]]])


def test_newton_solution_ignores_row_scaling():
    start = [1.2, 1.8]
    plain = newton_solve(_circle_and_hyperbola, _circle_and_hyperbola_jacobian, start)
    assert plain.converged
    assert_allclose(plain.solution, [1.0, 2.0], atol=1e-9)
    for weights in ([10.0, 0.1], [0.05, 1.0], [250.0, 4.0]):
        D = np.diag(weights)
        scaled = newton_solve(
            lambda v: D @ _circle_and_hyperbola(v),
            lambda v: D @ _circle_and_hyperbola_jacobian(v),
            start,
        )
        assert scaled.converged
        assert_allclose(scaled.solution, plain.solution, atol=1e-8)


def test_chord_iteration_converges_on_mild_problem():
    result = newton_solve(
        lambda v: np.array([v[0] + 0.1 * v[0] ** 3 - 1.0]),
        lambda v: np.array([[1.0 + 0.3 * v[0] ** 2]]),
        [1.0],
        NewtonConfig(reuse_jacobian=True),
    )
    assert result.converged
    assert result.solution[0] + 0.1 * result.solution[0] ** 3 == pytest.approx(1.0)


@pytest.mark.parametrize(
    "kwargs, field",
    [
        ({"tol_inf": 0.0}, "NewtonConfig.tol_inf"),
        ({"max_iter": 0}, "NewtonConfig.max_iter"),
        ({"damping": -1}, "NewtonConfig.damping"),
    ],
)
def test_newton_config_validation(kwargs, field):
    with pytest.raises(SpecError) as err:
        NewtonConfig(**kwargs)
    assert err.value.field == field


def test_solve_linear_returns_condition():
    A = np.array([[4.0, 1.0], [2.0, 3.0]])
    x, cond = solve_linear(A, [1.0, 2.0])
    assert_allclose(A @ x, [1.0, 2.0])
    assert cond == pytest.approx(np.linalg.cond(A, np.inf))


def test_solve_linear_recovers_known_solution():
    rng = np.random.default_rng(11)
    A = rng.normal(size=(8, 8)) + 8.0 * np.eye(8)
    expected = rng.normal(size=8)
    x, cond = solve_linear(A, A @ expected)
    assert_allclose(x, expected, atol=1e-9)
    assert 1.0 <= cond < 1e3


def test_solve_linear_residual_bound_on_random_systems():
    rng = np.random.default_rng(29)
    for _ in range(1000):
        n = int(rng.integers(1, 13))
        A = rng.normal(size=(n, n))
        b = rng.normal(size=n)
        try:
            x, _ = solve_linear(A, b)
        except SingularMatrix:
            continue
        bound = 1e-9 * (
            np.linalg.norm(A, np.inf) * np.linalg.norm(x, np.inf) + np.linalg.norm(b, np.inf)
        )
        assert np.linalg.norm(A @ x - b, np.inf) <= bound


def test_factorize_rejects_singular_matrix():
    with pytest.raises(SingularMatrix, match="pivot"):
        factorize([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(SingularMatrix, match="non-finite"):
        factorize([[1.0, np.nan], [0.0, 1.0]])


def _loaded(sys, p):
    buses = list(sys.buses)
    buses[1] = replace(buses[1], p_load=p)
    return replace(sys, buses=tuple(buses))


def test_power_flow_without_load_is_flat(two_bus_system):
    V, th = power_flow(_loaded(two_bus_system, 0.0))
    assert_allclose(V, [1.0, 1.0], atol=1e-12)
    assert_allclose(th, [0.0, 0.0], atol=1e-12)


def test_power_flow_two_bus_closed_form(two_bus_system):
    # lossless line, unity power factor: V2 = cos θ and P = sin 2θ / (2X)
    V, th = power_flow(two_bus_system)
    angle = 0.5 * math.asin(2 * 0.5 * 0.5)
    assert V[1] == pytest.approx(math.cos(angle), abs=1e-9)
    assert th[1] == pytest.approx(-angle, abs=1e-9)


def test_power_flow_beyond_loadability(two_bus_system):
    # maximum deliverable power is V1² / (2X) = 1.0
    with pytest.raises(PowerFlowDiverged):
        power_flow(_loaded(two_bus_system, 1.5))


def test_initial_equilibrium_is_a_fixed_point(benign_start):
    model = PowerSystemModel(benign_start.system)
    f, g, hc = model.residuals(benign_start.state)
    assert np.max(np.abs(f)) <= 1e-9
    assert np.max(np.abs(g)) <= 1e-9
    assert np.max(np.abs(hc)) <= 1e-9
    assert model.is_fixed_point(benign_start.state)

    system = benign_start.system
    assert system.initialized
    assert system.avrs[0].v_ref is not None
    assert system.generators[0].p_m == pytest.approx(system.generators[0].p_gen)
    assert system.ltcs[0].v_ref is not None
    assert system.erl_loads[0].v0 is not None
    # recovery states start at zero
    assert_allclose(benign_start.state.zc, 0.0, atol=1e-12)
    assert benign_start.state.zd.taps == (1.0,)
    assert benign_start.state.zd.oxl_active == (False,)


def test_field_ceiling_too_low(benign_system):
    avr = replace(benign_system.avrs[0], efd_max=1.0)
    with pytest.raises(InfeasibleDeviceInit, match="outside"):
        initialize_equilibrium(replace(benign_system, avrs=(avr,)))


def test_oxl_limit_below_initial_field(benign_system):
    oxl = replace(benign_system.oxls[0], efd_limit=1.0)
    with pytest.raises(InfeasibleDeviceInit, match="OXL"):
        initialize_equilibrium(replace(benign_system, oxls=(oxl,)))


def test_ltc_outside_deadband_at_start(benign_system):
    ltc = replace(benign_system.ltcs[0], v_ref=1.2)
    with pytest.raises(InfeasibleDeviceInit, match="deadband"):
        initialize_equilibrium(replace(benign_system, ltcs=(ltc,)))


def test_long_term_equilibrium_from_perturbed_guess(benign_start):
    model = PowerSystemModel(benign_start.system)
    sep = benign_start.state
    guess = sep.with_continuous(x=sep.x + 1e-3, y=sep.y - 1e-3)
    solved = solve_long_term_equilibrium(model, guess)
    assert_allclose(solved.vector(), sep.vector(), atol=1e-8)


def test_projection_keeps_slow_states(benign_start):
    model = PowerSystemModel(benign_start.system)
    sep = benign_start.state
    start = sep.with_continuous(zc=sep.zc + 1e-3)
    projected = project_to_manifold(model, start)
    assert_allclose(projected.zc, start.zc)
    assert model.manifold_residual(projected) <= 1e-9
