"""System description, scenario files and network admittance."""

from .network import (
    AdmittanceMatrix,
    TopologyOverlay,
    apply_event,
    build_admittance,
    isolated_buses,
)
from .parser import (
    bundled,
    load_scenario,
    load_system,
    parse_scenario,
    parse_system,
    serialize_scenario,
    serialize_system,
)
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

__all__ = [
    "AdmittanceMatrix",
    "AvrParams",
    "BranchSpec",
    "BranchStatus",
    "BusKind",
    "BusSpec",
    "ErlParams",
    "EventKind",
    "EventSpec",
    "GenParams",
    "GovParams",
    "LtcParams",
    "OxlParams",
    "ScenarioSpec",
    "StaticLoadSpec",
    "SystemSpec",
    "TopologyOverlay",
    "apply_event",
    "build_admittance",
    "bundled",
    "isolated_buses",
    "load_scenario",
    "load_system",
    "parse_scenario",
    "parse_system",
    "serialize_scenario",
    "serialize_system",
]
