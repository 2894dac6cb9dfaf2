from dataclasses import replace

import pytest

from qssaudit.dae.fixtures import SwitchedGain
from qssaudit.dae.spectrum import GammaS
from qssaudit.diagnose import (
    Verdict,
    classify_outcome,
    compare_runs,
    diagnose,
    find_long_term_sep,
    per_event_audit,
)
from qssaudit.exceptions import EmptyOverlap, NotFixedPoint, SpecError
from qssaudit.netmodel.specs import ScenarioSpec
from qssaudit.sim.complete import run_complete
from qssaudit.sim.settings import SimConfig
from qssaudit.sim.transient import Membership
from qssaudit.sim.trajectory import Termination, TerminationKind, Trajectory

SEP = TerminationKind.CONVERGED_TO_SEP
DIV = TerminationKind.DIVERGED
SING = TerminationKind.SINGULARITY_LIKELY
END = TerminationKind.REACHED_TEND


def _trajectory(tts, kind, shift=0.0, times=(0.0, 1.0)):
    traj = Trajectory("test", tts.layout)
    start = tts.initial_state()
    for t in times:
        traj.record(start.with_continuous(t=t, zc=start.zc + shift))
    traj.termination = Termination(kind, times[-1], traj.final_state)
    return traj


@pytest.mark.parametrize(
    "complete, qss, shift, verdict",
    [
        (SEP, SEP, 0.0, Verdict.AGREE_STABLE_SAME_SEP),
        (SEP, SEP, 1e-3, Verdict.DIFFERENT_SEPS),
        (DIV, SEP, 0.0, Verdict.COUNTER_EXAMPLE),
        (SING, SEP, 0.0, Verdict.COUNTER_EXAMPLE),
        (DIV, SING, 0.0, Verdict.AGREE_UNSTABLE),
        (SEP, DIV, 0.0, Verdict.INCONCLUSIVE),
        (END, SEP, 0.0, Verdict.INCONCLUSIVE),
        (DIV, END, 0.0, Verdict.INCONCLUSIVE),
    ],
)
def test_classify_outcome(tts, complete, qss, shift, verdict):
    traj_c = _trajectory(tts, complete)
    traj_q = _trajectory(tts, qss, shift)
    assert classify_outcome(traj_c, traj_q, 1e-5) is verdict


def test_compare_runs_reports_constant_offset(tts):
    traj_c = _trajectory(tts, SEP, times=(0.0, 0.5, 1.0))
    traj_q = _trajectory(tts, SEP, shift=0.1, times=(0.0, 1.0))
    deviation = compare_runs(traj_c, traj_q)
    assert set(deviation) == set(tts.layout.names())
    assert deviation["zc.tts.z"] == pytest.approx(0.1)
    assert deviation["x.tts.x"] == 0.0


def test_compare_runs_interpolates_over_overlap(tts):
    run = run_complete(tts, ScenarioSpec(t_end=1.0))
    assert max(compare_runs(run, run).values()) == 0.0
    late = _trajectory(tts, END, times=(2.0, 3.0))
    with pytest.raises(EmptyOverlap, match="do not overlap"):
        compare_runs(run, late)


def test_audit_without_transitions_is_empty(tts):
    traj = run_complete(tts, ScenarioSpec(t_end=1.0))
    assert per_event_audit(tts, traj) == []


def test_audit_rejects_foreign_trajectory(benign_system, tts):
    traj = run_complete(tts, ScenarioSpec(t_end=1.0))
    with pytest.raises(SpecError, match="does not belong"):
        per_event_audit(benign_system, traj)


def test_audit_covers_transition_that_failed_to_settle():
    dae = SwitchedGain(t_switch=1.0, m_after=0.0)
    traj = run_complete(dae, ScenarioSpec(t_end=5.0))
    assert traj.termination.kind is SING
    [record] = per_event_audit(dae, traj)
    assert record.event_time == 1.0
    assert record.z_d_after.taps == (0.0,)
    assert record.outside
    assert record.gamma_s is None
    assert "failed" in record.gamma_s_note


def test_long_term_sep_from_perturbed_guess(benign_start):
    sep = benign_start.state
    guess = sep.with_continuous(zc=sep.zc + 1e-3, x=sep.x - 1e-3)
    found = find_long_term_sep(benign_start.system, guess)
    assert found.vector() == pytest.approx(sep.vector(), abs=1e-8)


def test_long_term_sep_must_be_discrete_fixed_point(benign_start):
    system = benign_start.system
    ltc = replace(system.ltcs[0], v_ref=system.ltcs[0].v_ref - 0.1)
    with pytest.raises(NotFixedPoint, match="T1 would move"):
        find_long_term_sep(replace(system, ltcs=(ltc,)), benign_start.state)


@pytest.mark.slow
def test_benign_scenario_agrees(benign_start, benign_scenario):
    report = diagnose(benign_start, benign_scenario)
    assert report.verdict is Verdict.AGREE_STABLE_SAME_SEP
    assert set(report.max_deviation) == set(report.layout.names())
    assert max(report.max_deviation.values()) <= 0.02
    assert [a.event_time for a in report.audits] == [5.0, 10.0, 15.0, 20.0, 25.0]
    assert all(a.membership.status is Membership.INSIDE for a in report.audits)
    for check in report.qss_gamma_s:
        assert check.gamma_s.status is GammaS.IN_GAMMA_S
        assert check.slow.max_real_part < 0.0

    data = report.to_dict()
    assert data["verdict"] == "AgreeStableSameSEP"
    assert data["sep_complete"]["zd.T1.m"] == pytest.approx(0.975)
    assert len(data["audits"]) == 5
    assert data["qss_gamma_s"][-1]["slow"]["max_real_part"] < 0.0


@pytest.mark.slow
def test_counter_scenario_is_flagged(counter_system, counter_scenario):
    # the slowest Inside audit needs close to 90 s to settle
    report = diagnose(counter_system, counter_scenario, SimConfig(transient_t_max=150.0))
    assert report.verdict is Verdict.COUNTER_EXAMPLE
    assert report.termination_complete.kind is TerminationKind.DIVERGED
    assert report.termination_qss.kind is TerminationKind.CONVERGED_TO_SEP
    assert report.sep_complete is None

    assert [a.event_time for a in report.audits] == [2.0, 3.0, 4.0, 5.0, 6.0]
    assert [a.membership.status for a in report.audits] == [Membership.INSIDE] * 4 + [
        Membership.OUTSIDE
    ]
    assert len(report.qss_gamma_s) == 3
    for check in report.qss_gamma_s:
        assert check.gamma_s.status is GammaS.IN_GAMMA_S
        assert check.slow.max_real_part < 0.0
