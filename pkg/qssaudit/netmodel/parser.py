"""
JSON system and scenario files.

Parsing resolves every cross-reference and checks the invariants of each
record; failures raise SpecError naming the offending field.
"""

import dataclasses
import json
import logging
import math
from collections import Counter
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Type, TypeVar

from ..config import config
from ..exceptions import SpecError
from .network import TopologyOverlay, islands
from .specs import (
    AvrParams,
    BranchSpec,
    BranchStatus,
    BusKind,
    BusSpec,
    ErlParams,
    EventKind,
    EventSpec,
    GenParams,
    GovParams,
    LtcParams,
    OxlParams,
    ScenarioSpec,
    StaticLoadSpec,
    SystemSpec,
)

logger = logging.getLogger(__name__)

R = TypeVar("R")

# JSON section name -> record type
SECTIONS: Dict[str, type] = {
    "buses": BusSpec,
    "branches": BranchSpec,
    "generators": GenParams,
    "avrs": AvrParams,
    "governors": GovParams,
    "oxls": OxlParams,
    "erl_loads": ErlParams,
    "ltcs": LtcParams,
    "static_loads": StaticLoadSpec,
}

ENUM_FIELDS = {"kind": BusKind, "status": BranchStatus}
STRING_FIELDS = {
    "id", "bus", "gen", "branch", "from_bus", "to_bus", "tap_side", "controlled_bus",
}


def _decode(text: bytes | str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecError(
            f"syntax error at line {e.lineno} column {e.colno}: {e.msg}",
            field=f"@{e.pos}",
        ) from e


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecError(f"{where} must be a number", field=where)
    if not math.isfinite(value):
        raise SpecError(f"{where} must be finite", field=where)
    return float(value)


def _record(cls: Type[R], raw: Any, where: str) -> R:
    """Build one frozen record, converting numbers and enums by field type."""
    if not isinstance(raw, dict):
        raise SpecError(f"{where} must be an object", field=where)

    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - set(fields))
    if unknown:
        raise SpecError(f"{where}: unknown key '{unknown[0]}'", field=where)

    kwargs = {}
    for name, f in fields.items():
        label = f"{cls.__name__}.{name}"
        has_default = (
            f.default is not dataclasses.MISSING
            or f.default_factory is not dataclasses.MISSING
        )
        if name not in raw:
            if not has_default:
                raise SpecError(f"{where}: missing field '{name}'", field=label)
            continue
        value = raw[name]
        if value is None:
            kwargs[name] = None
        elif name in ENUM_FIELDS:
            try:
                kwargs[name] = ENUM_FIELDS[name](value)
            except ValueError:
                raise SpecError(
                    f"{label} has invalid value {value!r}", field=label
                ) from None
        elif name in STRING_FIELDS:
            kwargs[name] = str(value)
        else:
            kwargs[name] = _number(value, label)
    return cls(**kwargs)


def _require(condition: bool, message: str, field: str) -> None:
    if not condition:
        raise SpecError(message, field=field)


def _unique(ids: List[str], kind: str) -> None:
    dupes = [k for k, n in Counter(ids).items() if n > 1]
    if dupes:
        raise SpecError(f"duplicate {kind} id '{dupes[0]}'", field=f"{kind}.id")


def _check_system(sys: SystemSpec) -> None:
    bus_ids = [b.id for b in sys.buses]
    branch_ids = [br.id for br in sys.branches]
    gen_ids = [g.id for g in sys.generators]
    _unique(bus_ids, "bus")
    _unique(branch_ids, "branch")
    _unique(gen_ids, "generator")
    for kind, records in (
        ("avr", sys.avrs),
        ("governor", sys.governors),
        ("oxl", sys.oxls),
        ("erl load", sys.erl_loads),
        ("ltc", sys.ltcs),
        ("static load", sys.static_loads),
    ):
        _unique([r.id for r in records], kind)

    kinds = {b.id: b.kind for b in sys.buses}

    def known_bus(bus_id: Optional[str], field: str) -> None:
        if bus_id not in kinds:
            raise SpecError(f"unknown bus id '{bus_id}'", field=field)

    _require(len(sys.buses) > 0, "system has no buses", "buses")
    for b in sys.buses:
        _require(b.base_kv > 0, "BusSpec.base_kv must be > 0", "BusSpec.base_kv")
        if b.kind in (BusKind.SLACK, BusKind.PV):
            _require(
                b.v_set is not None,
                f"BusSpec.v_set is required on {b.kind.value} bus '{b.id}'",
                "BusSpec.v_set",
            )
            _require(
                0.5 < b.v_set < 1.5,
                "BusSpec.v_set must lie in (0.5, 1.5)",
                "BusSpec.v_set",
            )

    for br in sys.branches:
        known_bus(br.from_bus, "BranchSpec.from_bus")
        known_bus(br.to_bus, "BranchSpec.to_bus")
        _require(
            br.from_bus != br.to_bus,
            f"BranchSpec '{br.id}' connects bus '{br.from_bus}' to itself",
            "BranchSpec.to_bus",
        )
        _require(
            br.r != 0 or br.x != 0,
            f"BranchSpec '{br.id}' has r = x = 0",
            "BranchSpec.x",
        )
        if br.tap_side is not None:
            _require(
                br.tap_side in (br.from_bus, br.to_bus),
                f"BranchSpec.tap_side '{br.tap_side}' is not an end of '{br.id}'",
                "BranchSpec.tap_side",
            )

    gens = {g.id: g for g in sys.generators}

    def known_gen(gen_id: str, field: str) -> None:
        if gen_id not in gens:
            raise SpecError(f"unknown generator id '{gen_id}'", field=field)

    for g in sys.generators:
        known_bus(g.bus, "GenParams.bus")
        _require(
            kinds[g.bus] is BusKind.PV,
            f"generator '{g.id}' must sit on a PV bus",
            "GenParams.bus",
        )
        for name in ("H", "x_d", "x_d_prime", "t_d0_prime", "omega_s"):
            _require(
                getattr(g, name) > 0, f"GenParams.{name} must be > 0",
                f"GenParams.{name}",
            )
        _require(g.D >= 0, "GenParams.D must be >= 0", "GenParams.D")

    for a in sys.avrs:
        known_gen(a.gen, "AvrParams.gen")
        _require(a.t_e > 0, "AvrParams.t_e must be > 0", "AvrParams.t_e")
        _require(a.k_a > 0, "AvrParams.k_a must be > 0", "AvrParams.k_a")
        _require(
            a.efd_min < a.efd_max,
            "AvrParams.efd_min must be < efd_max",
            "AvrParams.efd_min",
        )
    avr_count = Counter(a.gen for a in sys.avrs)
    for g in sys.generators:
        _require(
            avr_count[g.id] == 1,
            f"generator '{g.id}' needs exactly one AVR",
            "AvrParams.gen",
        )

    for gv in sys.governors:
        known_gen(gv.gen, "GovParams.gen")
        _require(gv.t_g > 0, "GovParams.t_g must be > 0", "GovParams.t_g")
    _require(
        max(Counter(gv.gen for gv in sys.governors).values(), default=0) <= 1,
        "a generator has more than one governor",
        "GovParams.gen",
    )

    for o in sys.oxls:
        known_gen(o.gen, "OxlParams.gen")
        _require(o.delay_s >= 0, "OxlParams.delay_s must be >= 0", "OxlParams.delay_s")
    _require(
        max(Counter(o.gen for o in sys.oxls).values(), default=0) <= 1,
        "a generator has more than one OXL",
        "OxlParams.gen",
    )

    for ld in sys.erl_loads:
        known_bus(ld.bus, "ErlParams.bus")
        _require(
            kinds[ld.bus] is not BusKind.SLACK,
            f"load '{ld.id}' sits on the slack bus",
            "ErlParams.bus",
        )
        _require(ld.t_p > 0, "ErlParams.t_p must be > 0", "ErlParams.t_p")
        _require(ld.t_q > 0, "ErlParams.t_q must be > 0", "ErlParams.t_q")
        if ld.v0 is not None:
            _require(ld.v0 > 0, "ErlParams.v0 must be > 0", "ErlParams.v0")

    for sl in sys.static_loads:
        known_bus(sl.bus, "StaticLoadSpec.bus")

    branches = {br.id: br for br in sys.branches}
    for t in sys.ltcs:
        if t.branch not in branches:
            raise SpecError(f"unknown branch id '{t.branch}'", field="LtcParams.branch")
        _require(
            branches[t.branch].tap_side is not None,
            f"branch '{t.branch}' under LTC '{t.id}' has no tap_side",
            "BranchSpec.tap_side",
        )
        known_bus(t.controlled_bus, "LtcParams.controlled_bus")
        _require(t.delta_m > 0, "LtcParams.delta_m must be > 0", "LtcParams.delta_m")
        _require(t.deadband > 0, "LtcParams.deadband must be > 0", "LtcParams.deadband")
        _require(t.period_s > 0, "LtcParams.period_s must be > 0", "LtcParams.period_s")
        _require(
            t.m_min <= t.m0 <= t.m_max,
            "LtcParams.m0 must lie in [m_min, m_max]",
            "LtcParams.m0",
        )
    _require(
        max(Counter(t.branch for t in sys.ltcs).values(), default=0) <= 1,
        "a branch has more than one LTC",
        "LtcParams.branch",
    )

    for group in islands(sys, TopologyOverlay.from_system(sys)):
        slacks = [i for i in group if sys.buses[i].kind is BusKind.SLACK]
        _require(
            len(slacks) == 1,
            "each island needs exactly one Slack bus "
            f"(island {[sys.buses[i].id for i in group]} has {len(slacks)})",
            "BusSpec.kind",
        )


def _load_shunts(raw: Any, n_bus: int) -> Tuple[complex, ...]:
    """[[g, b], ...], one pair per bus."""
    if not isinstance(raw, list):
        raise SpecError("'load_shunts' must be a list", field="load_shunts")
    _require(
        len(raw) == n_bus,
        f"load_shunts has {len(raw)} entries for {n_bus} buses",
        "load_shunts",
    )
    shunts = []
    for i, pair in enumerate(raw):
        where = f"load_shunts[{i}]"
        if not isinstance(pair, list) or len(pair) != 2:
            raise SpecError(f"{where} must be a [g, b] pair", field=where)
        shunts.append(complex(_number(pair[0], where), _number(pair[1], where)))
    return tuple(shunts)


def system_from_dict(raw: Any) -> SystemSpec:
    if not isinstance(raw, dict):
        raise SpecError("system file must hold a JSON object", field="$")
    schema = raw.get("schema")
    if schema != config.SCHEMA_VERSION:
        raise SpecError(
            f"unsupported schema version {schema!r}", field="schema"
        )
    unknown = sorted(set(raw) - set(SECTIONS) - {"schema", "base_mva", "load_shunts"})
    if unknown:
        raise SpecError(f"unknown section '{unknown[0]}'", field=unknown[0])

    sections = {}
    for name, cls in SECTIONS.items():
        items = raw.get(name, [])
        if not isinstance(items, list):
            raise SpecError(f"'{name}' must be a list", field=name)
        sections[name] = tuple(
            _record(cls, item, f"{name}[{i}]") for i, item in enumerate(items)
        )

    shunts = raw.get("load_shunts")
    if shunts is not None:
        shunts = _load_shunts(shunts, len(sections["buses"]))

    sys = SystemSpec(
        schema=schema,
        base_mva=_number(raw.get("base_mva", 100.0), "base_mva"),
        load_shunts=shunts,
        **sections,
    )
    _check_system(sys)
    return sys


def parse_system(text: bytes | str) -> SystemSpec:
    """Parse and validate a JSON system description."""
    sys = system_from_dict(_decode(text))
    logger.debug(
        "Parsed system: %d buses, %d branches, %d generators",
        len(sys.buses),
        len(sys.branches),
        len(sys.generators),
    )
    return sys


def _admittance(value: Any, where: str) -> complex:
    if isinstance(value, list) and len(value) == 2:
        return complex(_number(value[0], where), _number(value[1], where))
    return complex(_number(value, where), 0.0)


def scenario_from_dict(raw: Any, sys: Optional[SystemSpec] = None) -> ScenarioSpec:
    if not isinstance(raw, dict):
        raise SpecError("scenario file must hold a JSON object", field="$")
    t_end = _number(raw.get("t_end"), "t_end")
    _require(t_end > 0, "t_end must be > 0", "t_end")
    qss_start = raw.get("qss_start")
    if qss_start is not None:
        qss_start = _number(qss_start, "qss_start")
        _require(0 <= qss_start <= t_end, "qss_start must lie in [0, t_end]", "qss_start")

    events = []
    for i, item in enumerate(raw.get("events", [])):
        where = f"events[{i}]"
        if not isinstance(item, dict):
            raise SpecError(f"{where} must be an object", field=where)
        try:
            kind = EventKind(item.get("kind"))
        except ValueError:
            raise SpecError(
                f"{where}.kind has invalid value {item.get('kind')!r}",
                field=f"{where}.kind",
            ) from None
        time = _number(item.get("time"), f"{where}.time")
        _require(0 <= time <= t_end, f"{where}.time must lie in [0, t_end]", f"{where}.time")
        if kind in (EventKind.APPLY_FAULT, EventKind.CLEAR_FAULT):
            _require("bus" in item, f"{where} needs a bus", f"{where}.bus")
            admittance = None
            if kind is EventKind.APPLY_FAULT:
                admittance = _admittance(
                    item.get("admittance", config.FAULT_ADMITTANCE),
                    f"{where}.admittance",
                )
            events.append(
                EventSpec(time, kind, bus=str(item["bus"]), admittance=admittance)
            )
        else:
            _require("branch" in item, f"{where} needs a branch", f"{where}.branch")
            events.append(EventSpec(time, kind, branch=str(item["branch"])))

    # stable: simultaneous events keep file order
    events.sort(key=lambda ev: ev.time)

    active = set()
    for i, ev in enumerate(events):
        if ev.kind is EventKind.APPLY_FAULT:
            active.add(ev.bus)
        elif ev.kind is EventKind.CLEAR_FAULT:
            _require(
                ev.bus in active,
                f"ClearFault at bus '{ev.bus}' has no prior ApplyFault",
                f"events[{i}].bus",
            )
            active.discard(ev.bus)

    if sys is not None:
        bus_ids = {b.id for b in sys.buses}
        branch_ids = {br.id for br in sys.branches}
        for i, ev in enumerate(events):
            if ev.bus is not None and ev.bus not in bus_ids:
                raise SpecError(f"unknown bus id '{ev.bus}'", field=f"events[{i}].bus")
            if ev.branch is not None and ev.branch not in branch_ids:
                raise SpecError(
                    f"unknown branch id '{ev.branch}'", field=f"events[{i}].branch"
                )

    return ScenarioSpec(t_end=t_end, events=tuple(events), qss_start=qss_start)


def parse_scenario(text: bytes | str, sys: Optional[SystemSpec] = None) -> ScenarioSpec:
    """Parse a JSON scenario; with ``sys`` its bus/branch references are checked."""
    return scenario_from_dict(_decode(text), sys)


def _plain(record: Any) -> Dict[str, Any]:
    out = {}
    for f in dataclasses.fields(record):
        value = getattr(record, f.name)
        out[f.name] = value.value if hasattr(value, "value") else value
    return out


def system_to_dict(sys: SystemSpec) -> Dict[str, Any]:
    raw: Dict[str, Any] = {"schema": sys.schema, "base_mva": sys.base_mva}
    for name in SECTIONS:
        raw[name] = [_plain(r) for r in getattr(sys, name)]
    if sys.load_shunts is not None:
        raw["load_shunts"] = [[y.real, y.imag] for y in sys.load_shunts]
    return raw


def serialize_system(sys: SystemSpec) -> bytes:
    return json.dumps(system_to_dict(sys), indent=2).encode()


def serialize_scenario(scenario: ScenarioSpec) -> bytes:
    events = []
    for ev in scenario.events:
        item: Dict[str, Any] = {"time": ev.time, "kind": ev.kind.value}
        if ev.bus is not None:
            item["bus"] = ev.bus
        if ev.branch is not None:
            item["branch"] = ev.branch
        if ev.admittance is not None:
            item["admittance"] = [ev.admittance.real, ev.admittance.imag]
        events.append(item)
    raw = {"t_end": scenario.t_end, "qss_start": scenario.qss_start, "events": events}
    return json.dumps(raw, indent=2).encode()


def _read(path: str | Path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise SpecError(f"cannot read {path}: {e.strerror}", field=str(path)) from e


def _with_path(path: str | Path, e: SpecError) -> SpecError:
    return SpecError(f"{path}: {e}", field=e.field)


def load_system(path: str | Path) -> SystemSpec:
    text = _read(path)
    try:
        return parse_system(text)
    except SpecError as e:
        raise _with_path(path, e) from e


def load_scenario(path: str | Path, sys: Optional[SystemSpec] = None) -> ScenarioSpec:
    text = _read(path)
    try:
        return parse_scenario(text, sys)
    except SpecError as e:
        raise _with_path(path, e) from e


def bundled(name: str) -> Path:
    """Path of a JSON fixture shipped in ``qssaudit/data``."""
    return Path(__file__).resolve().parent.parent / "data" / name
