import json
import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qssaudit.exceptions import FaultNotActive, SpecError
from qssaudit.netmodel.network import (
    TopologyOverlay,
    apply_event,
    build_admittance,
    isolated_buses,
)
from qssaudit.netmodel.parser import (
    parse_scenario,
    parse_system,
    serialize_scenario,
    serialize_system,
)
from qssaudit.netmodel.specs import (
    BranchSpec,
    BranchStatus,
    BusKind,
    BusSpec,
    EventKind,
    EventSpec,
    SystemSpec,
)


def test_bundled_system_parses(benign_system):
    assert [b.id for b in benign_system.buses] == ["B1", "B2", "B3"]
    assert benign_system.slack_indices == (0,)
    assert benign_system.network_indices == (1, 2)
    assert benign_system.buses[1].kind is BusKind.PV
    assert benign_system.branches[0].status is BranchStatus.CLOSED
    # set-points are back-solved later
    assert benign_system.avrs[0].v_ref is None
    assert not benign_system.initialized


def test_bundled_scenario_parses(benign_scenario):
    assert benign_scenario.t_end == 300.0
    assert [ev.describe() for ev in benign_scenario.events] == ["OpenBranch(L2)"]
    assert benign_scenario.qss_start == 12.0


def test_system_serialization_preserves_records(benign_system, benign_start):
    assert parse_system(serialize_system(benign_system)) == benign_system
    again = parse_system(serialize_system(benign_start.system))
    assert again.initialized
    assert_allclose(again.load_shunts, benign_start.system.load_shunts)


def test_schema_version_is_checked(make_system):
    with pytest.raises(SpecError, match="schema") as err:
        make_system(schema=2)
    assert err.value.field == "schema"


def test_unknown_key_is_rejected(raw_system):
    raw_system["buses"][0]["colour"] = "red"
    with pytest.raises(SpecError, match="unknown key 'colour'"):
        parse_system(json.dumps(raw_system))


def test_syntax_error_names_position():
    with pytest.raises(SpecError, match="syntax error") as err:
        parse_system('{"schema": 1, "buses": [')
    assert err.value.field.startswith("@")


def test_island_without_slack_is_rejected(raw_system, make_system):
    lines = [br for br in raw_system["branches"] if br["id"] != "T1"]
    with pytest.raises(SpecError, match="exactly one Slack"):
        make_system(branches=lines, ltcs=[])


def test_generator_must_sit_on_pv_bus(raw_system, make_system):
    buses = [dict(b) for b in raw_system["buses"]]
    buses[1] = {"id": "B2", "base_kv": 400.0, "kind": "PQ"}
    with pytest.raises(SpecError, match="must sit on a PV bus"):
        make_system(buses=buses)


def test_generator_needs_one_avr(make_system):
    with pytest.raises(SpecError, match="exactly one AVR"):
        make_system(avrs=[])


def test_ltc_branch_needs_tap_side(raw_system, make_system):
    branches = [dict(br) for br in raw_system["branches"]]
    for br in branches:
        br.pop("tap_side", None)
    with pytest.raises(SpecError, match="no tap_side"):
        make_system(branches=branches)


def test_ltc_start_ratio_within_limits(raw_system, make_system):
    ltc = dict(raw_system["ltcs"][0], m0=1.2)
    with pytest.raises(SpecError, match="m0 must lie") as err:
        make_system(ltcs=[ltc])
    assert err.value.field == "LtcParams.m0"


@pytest.mark.parametrize(
    "shunts, message, field",
    [
        ({"g": 1}, "must be a list", "load_shunts"),
        ([[0.0, 0.0]], "1 entries for 3 buses", "load_shunts"),
        ([[0.0, 0.0], [0.0], [0.0, 0.0]], "must be a \\[g, b\\] pair", "load_shunts[1]"),
        ([[0.0, 0.0], [0.0, 0.0], ["x", 0.0]], "must be a number", "load_shunts[2]"),
        ([[0.0, 0.0], [0.0, 0.0], [True, 0.0]], "must be a number", "load_shunts[2]"),
    ],
)
def test_malformed_load_shunts_are_rejected(make_system, shunts, message, field):
    with pytest.raises(SpecError, match=message) as err:
        make_system(load_shunts=shunts)
    assert err.value.field == field


def test_load_shunts_must_be_finite(raw_system):
    raw_system["load_shunts"] = [[0.0, 0.0], [0.0, 0.0], [0.0, float("inf")]]
    with pytest.raises(SpecError, match="must be finite"):
        parse_system(json.dumps(raw_system))


@pytest.mark.parametrize(
    "events, message",
    [
        ([{"time": 1.0, "kind": "ClearFault", "bus": "B3"}], "no prior ApplyFault"),
        ([{"time": 11.0, "kind": "OpenBranch", "branch": "L1"}], "must lie in"),
        ([{"time": 1.0, "kind": "Explode", "branch": "L1"}], "invalid value"),
        ([{"time": 1.0, "kind": "OpenBranch"}], "needs a branch"),
        ([{"time": 1.0, "kind": "OpenBranch", "branch": "L9"}], "unknown branch id 'L9'"),
        ([{"time": 1.0, "kind": "ApplyFault", "bus": "B7"}], "unknown bus id 'B7'"),
    ],
)
def test_invalid_scenarios(benign_system, events, message):
    text = json.dumps({"t_end": 10.0, "events": events})
    with pytest.raises(SpecError, match=message):
        parse_scenario(text, benign_system)


def test_scenario_events_sorted_and_fault_defaults():
    text = """
    {"t_end": 5.0, "events": [
        {"time": 2.0, "kind": "ClearFault", "bus": "B3"},
        {"time": 1.0, "kind": "ApplyFault", "bus": "B3"},
        {"time": 3.0, "kind": "ApplyFault", "bus": "B2", "admittance": [0.0, -0.5]}
    ]}
    """
    scenario = parse_scenario(text)
    assert [ev.kind for ev in scenario.events] == [
        EventKind.APPLY_FAULT,
        EventKind.CLEAR_FAULT,
        EventKind.APPLY_FAULT,
    ]
    assert scenario.events[0].admittance == complex(1e4, 0.0)
    assert scenario.events[2].admittance == complex(0.0, -0.5)
    assert parse_scenario(serialize_scenario(scenario)) == scenario


def test_two_bus_admittance(two_bus_system):
    Y = build_admittance(two_bus_system).matrix
    y = 1.0 / 0.5j
    assert_allclose(Y, [[y, -y], [-y, y]])


def test_tap_is_stamped_on_tap_side(benign_system):
    Y = build_admittance(benign_system, taps=[1.05]).matrix
    y_t, y_1, y_2 = 1.0 / 0.15j, 1.0 / 0.5j, 1.0 / 0.8j
    assert Y[0, 0] == pytest.approx(y_t / 1.05**2)
    assert Y[0, 2] == pytest.approx(-y_t / 1.05)
    assert Y[2, 0] == pytest.approx(-y_t / 1.05)
    assert Y[2, 2] == pytest.approx(y_t + y_1 + y_2)
    assert Y[1, 1] == pytest.approx(y_1 + y_2)
    assert_allclose(Y, Y.T)


def test_events_change_admittance(benign_system):
    overlay = TopologyOverlay.from_system(benign_system)
    base = build_admittance(benign_system, overlay=overlay).matrix

    opened = apply_event(overlay, EventSpec(1.0, EventKind.OPEN_BRANCH, branch="L2"))
    assert opened.topology_version == overlay.topology_version + 1
    assert not opened.is_closed("L2")
    Y = build_admittance(benign_system, overlay=opened)
    assert Y.topology_version == opened.topology_version
    assert Y.matrix[1, 2] == pytest.approx(-1.0 / 0.5j)

    faulted = apply_event(
        opened, EventSpec(2.0, EventKind.APPLY_FAULT, bus="B3", admittance=0.3 - 0.2j)
    )
    assert faulted.fault_at("B3") == 0.3 - 0.2j
    delta = build_admittance(benign_system, overlay=faulted).matrix - Y.matrix
    assert delta[2, 2] == pytest.approx(0.3 - 0.2j)
    assert np.count_nonzero(np.abs(delta) > 1e-12) == 1

    cleared = apply_event(faulted, EventSpec(3.0, EventKind.CLEAR_FAULT, bus="B3"))
    closed = apply_event(cleared, EventSpec(4.0, EventKind.CLOSE_BRANCH, branch="L2"))
    assert closed == overlay
    assert_allclose(build_admittance(benign_system, overlay=closed).matrix, base)


def test_clearing_inactive_fault_fails(benign_system):
    overlay = TopologyOverlay.from_system(benign_system)
    with pytest.raises(FaultNotActive):
        apply_event(overlay, EventSpec(1.0, EventKind.CLEAR_FAULT, bus="B3"))


def test_unknown_branch_event_fails(benign_system):
    overlay = TopologyOverlay.from_system(benign_system)
    with pytest.raises(SpecError, match="unknown branch id"):
        apply_event(overlay, EventSpec(1.0, EventKind.OPEN_BRANCH, branch="L9"))


def test_islanding_is_reported(benign_system, caplog):
    overlay = TopologyOverlay.from_system(benign_system)
    with caplog.at_level(logging.WARNING, logger="qssaudit.netmodel.network"):
        opened = apply_event(
            overlay, EventSpec(1.0, EventKind.OPEN_BRANCH, branch="T1"), benign_system
        )
    assert isolated_buses(benign_system, opened) == ["B2", "B3"]
    assert "without a slack" in caplog.text


def _radial_network(rng, n):
    buses = [BusSpec("B0", 100.0, BusKind.SLACK, v_set=1.0)]
    buses += [BusSpec(f"B{i}", 100.0, BusKind.PQ) for i in range(1, n)]
    branches = tuple(
        BranchSpec(
            f"L{i}", f"B{rng.integers(0, i)}", f"B{i}",
            r=float(rng.uniform(0.0, 0.1)), x=float(rng.uniform(0.05, 1.0)),
        )
        for i in range(1, n)
    )
    return SystemSpec(buses=tuple(buses), branches=branches)


def test_series_network_columns_sum_to_zero():
    rng = np.random.default_rng(3)
    for _ in range(200):
        sys = _radial_network(rng, int(rng.integers(2, 11)))
        Y = build_admittance(sys).matrix
        scale = np.max(np.abs(Y))
        assert np.max(np.abs(Y.sum(axis=0))) <= 1e-12 * scale
        assert_allclose(Y, Y.T)


def test_fault_clear_restores_admittance_exactly(benign_start):
    system = benign_start.system
    overlay = TopologyOverlay.from_system(system)
    before = build_admittance(system, taps=[0.9875], overlay=overlay).matrix
    faulted = apply_event(overlay, EventSpec(1.0, EventKind.APPLY_FAULT, bus="B3"))
    cleared = apply_event(faulted, EventSpec(1.1, EventKind.CLEAR_FAULT, bus="B3"))
    after = build_admittance(system, taps=[0.9875], overlay=cleared).matrix
    assert not np.array_equal(
        build_admittance(system, taps=[0.9875], overlay=faulted).matrix, before
    )
    assert np.array_equal(after, before)
