"""
Admittance matrix and topology overlay.

The overlay carries everything a scenario can change in the network (branch
statuses and bus faults); tap ratios come from the discrete state.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import FaultNotActive, SpecError
from .specs import BranchStatus, EventKind, EventSpec, SystemSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TopologyOverlay:
    """Branch statuses and active faults; the version is not part of equality."""

    closed: Tuple[Tuple[str, bool], ...]
    faults: Tuple[Tuple[str, complex], ...] = ()
    topology_version: int = field(default=0, compare=False)

    @classmethod
    def from_system(cls, sys: SystemSpec) -> "TopologyOverlay":
        return cls(
            closed=tuple(
                (br.id, br.status is BranchStatus.CLOSED) for br in sys.branches
            )
        )

    def is_closed(self, branch_id: str) -> bool:
        return dict(self.closed)[branch_id]

    def fault_at(self, bus_id: str) -> Optional[complex]:
        return dict(self.faults).get(bus_id)


@dataclass(frozen=True)
class AdmittanceMatrix:
    matrix: np.ndarray
    topology_version: int = 0

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def _set_branch(overlay: TopologyOverlay, branch_id: str, closed: bool) -> TopologyOverlay:
    statuses = dict(overlay.closed)
    if branch_id not in statuses:
        raise SpecError(f"unknown branch id '{branch_id}'", field="EventSpec.branch")
    statuses[branch_id] = closed
    return replace(
        overlay,
        closed=tuple((k, statuses[k]) for k, _ in overlay.closed),
        topology_version=overlay.topology_version + 1,
    )


def apply_event(
    overlay: TopologyOverlay, ev: EventSpec, sys: Optional[SystemSpec] = None
) -> TopologyOverlay:
    """
    Return the overlay after one scenario event.

    With ``sys`` given, bus references are checked and buses cut off from
    every slack bus are reported.
    """
    if sys is not None and ev.bus is not None:
        try:
            sys.bus_index(ev.bus)
        except KeyError:
            raise SpecError(f"unknown bus id '{ev.bus}'", field="EventSpec.bus") from None

    if ev.kind is EventKind.APPLY_FAULT:
        faults = dict(overlay.faults)
        faults[ev.bus] = ev.admittance
        new = replace(
            overlay,
            faults=tuple(sorted(faults.items())),
            topology_version=overlay.topology_version + 1,
        )
    elif ev.kind is EventKind.CLEAR_FAULT:
        faults = dict(overlay.faults)
        if ev.bus not in faults:
            raise FaultNotActive(f"no active fault at bus '{ev.bus}'")
        del faults[ev.bus]
        new = replace(
            overlay,
            faults=tuple(sorted(faults.items())),
            topology_version=overlay.topology_version + 1,
        )
    elif ev.kind is EventKind.OPEN_BRANCH:
        new = _set_branch(overlay, ev.branch, False)
    else:
        new = _set_branch(overlay, ev.branch, True)

    if sys is not None:
        isolated = isolated_buses(sys, new)
        if isolated:
            logger.warning(
                "%s at t=%.4f leaves buses without a slack: %s",
                ev.describe(),
                ev.time,
                ", ".join(isolated),
            )
    return new


def islands(sys: SystemSpec, overlay: TopologyOverlay) -> List[List[int]]:
    """Connected bus groups over closed branches, in bus order."""
    parent = list(range(len(sys.buses)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    closed = dict(overlay.closed)
    for br in sys.branches:
        if closed.get(br.id, False):
            a, b = find(sys.bus_index(br.from_bus)), find(sys.bus_index(br.to_bus))
            if a != b:
                parent[max(a, b)] = min(a, b)

    groups: Dict[int, List[int]] = {}
    for i in range(len(sys.buses)):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def isolated_buses(sys: SystemSpec, overlay: TopologyOverlay) -> List[str]:
    slack = set(sys.slack_indices)
    out = []
    for group in islands(sys, overlay):
        if not slack.intersection(group):
            out.extend(sys.buses[i].id for i in group)
    return out


def tap_ratios(
    sys: SystemSpec, taps: Sequence[float] | Mapping[str, float] | None
) -> Dict[str, float]:
    """Tap ratio per LTC branch id, from an LTC-ordered sequence or an id map."""
    if taps is None:
        return {t.branch: t.m0 for t in sys.ltcs}
    if isinstance(taps, Mapping):
        by_ltc = dict(taps)
        return {t.branch: by_ltc.get(t.id, t.m0) for t in sys.ltcs}
    return {t.branch: float(m) for t, m in zip(sys.ltcs, taps)}


def build_admittance(
    sys: SystemSpec,
    taps: Sequence[float] | Mapping[str, float] | None = None,
    overlay: Optional[TopologyOverlay] = None,
) -> AdmittanceMatrix:
    """Stamp the dense bus admittance matrix."""
    if overlay is None:
        overlay = TopologyOverlay.from_system(sys)
    closed = dict(overlay.closed)
    ratios = tap_ratios(sys, taps)

    n = len(sys.buses)
    Y = np.zeros((n, n), dtype=complex)
    for br in sys.branches:
        if not closed[br.id]:
            continue
        y = 1.0 / complex(br.r, br.x)
        half_b = 0.5j * br.b_shunt
        i, j = sys.bus_index(br.from_bus), sys.bus_index(br.to_bus)
        if br.tap_side is not None:
            m = ratios.get(br.id, 1.0)
            t = i if br.tap_side == br.from_bus else j
            o = j if t == i else i
            Y[t, t] += (y + half_b) / m**2
            Y[o, o] += y + half_b
            Y[t, o] -= y / m
            Y[o, t] -= y / m
        else:
            Y[i, i] += y + half_b
            Y[j, j] += y + half_b
            Y[i, j] -= y
            Y[j, i] -= y

    if sys.load_shunts is not None:
        Y[np.diag_indices(n)] += np.asarray(sys.load_shunts, dtype=complex)

    for bus_id, y_fault in overlay.faults:
        k = sys.bus_index(bus_id)
        Y[k, k] += y_fault

    return AdmittanceMatrix(matrix=Y, topology_version=overlay.topology_version)
