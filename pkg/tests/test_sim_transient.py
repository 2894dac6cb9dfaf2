import numpy as np
import pytest
from numpy.testing import assert_allclose

from qssaudit.dae.fixtures import oscillator, scalar_fast
from qssaudit.dae.spectrum import GammaS
from qssaudit.sim.settings import SimConfig
from qssaudit.sim.trajectory import TerminationKind
from qssaudit.sim.transient import (
    Membership,
    run_transient,
    stability_region_membership,
)


def test_small_perturbations_of_manifold_point_are_inside(tts):
    rng = np.random.default_rng(3)
    start = tts.initial_state()
    for _ in range(20):
        dx = rng.uniform(-1e-6, 1e-6, size=1)
        result = stability_region_membership(tts, start.with_continuous(x=start.x + dx), T_max=10.0)
        assert result.status is Membership.INSIDE
        assert result.gamma_s.status is GammaS.IN_GAMMA_S
        assert_allclose(result.sep.x, 0.5 * start.zc, atol=1e-6)


def test_slow_states_stay_frozen(tts):
    start = tts.initial_state()
    traj = run_transient(tts, start.with_continuous(x=start.x + 0.1), T_max=2.0)
    assert traj.model_name == "transient"
    assert all(s.zc[0] == start.zc[0] for s in traj.samples)
    assert all(s.zd == start.zd for s in traj.samples)


def test_first_steps_use_transient_step(tts):
    cfg = SimConfig()
    start = tts.initial_state()
    traj = run_transient(tts, start.with_continuous(x=start.x + 0.1), cfg, T_max=8.0)
    times = traj.times
    assert_allclose(np.diff(times[times <= 1.0]), cfg.h_transient)


def test_fast_instability_is_outside():
    dae = scalar_fast(a=1.0, b=0.0, p=0.0, q=1.0, eps=0.1)
    start = dae.initial_state()
    result = stability_region_membership(dae, start.with_continuous(x=[1e-3]))
    assert result.status is Membership.OUTSIDE
    assert result.termination.kind is TerminationKind.DIVERGED
    assert "state norm" in result.reason


def test_resting_on_unstable_point_is_inconclusive():
    dae = scalar_fast(a=1.0, b=0.0, p=0.0, q=1.0, eps=0.1)
    result = stability_region_membership(dae, dae.initial_state(), T_max=10.0)
    assert result.status is Membership.INCONCLUSIVE
    assert result.gamma_s.status is GammaS.UNSTABLE_FAST
    assert "UnstableFast" in result.reason


def test_undamped_oscillation_is_inconclusive():
    dae = oscillator(omega=2.0, amplitude=1.0)
    result = stability_region_membership(dae, dae.initial_state(), T_max=5.0)
    assert result.status is Membership.INCONCLUSIVE
    assert result.termination.kind is TerminationKind.REACHED_TEND
    assert result.sep is None


def test_membership_result_serializes(tts):
    result = stability_region_membership(tts, tts.initial_state(), T_max=5.0)
    data = result.to_dict()
    assert set(data) == {"status", "reason", "termination", "gamma_s_at_sep"}
    assert data["status"] == "Inside"
    assert data["termination"]["kind"] == "ConvergedToSEP"
    assert data["gamma_s_at_sep"]["status"] == "InGammaS"


@pytest.mark.slow
def test_rotor_swing_returns_to_equilibrium(benign_start):
    state = benign_start.state
    x = state.x.copy()
    x[0] += 0.05
    result = stability_region_membership(benign_start.system, state.with_continuous(x=x))
    assert result.status is Membership.INSIDE
    assert_allclose(result.sep.vector(), state.vector(), atol=1e-6)
