import json

import pytest

from qssaudit.dae.fixtures import two_timescale
from qssaudit.netmodel.parser import bundled, load_scenario, load_system, system_from_dict
from qssaudit.sim.settings import SimConfig
from qssaudit.solvers.equilibrium import initialize_equilibrium


@pytest.fixture
def raw_system() -> dict:
    """Editable copy of the benign system file."""
    return json.loads(bundled("benign_system.json").read_text())


@pytest.fixture
def make_system(raw_system):
    def make(**sections):
        raw = dict(raw_system)
        raw.update(sections)
        return system_from_dict(raw)

    return make


@pytest.fixture(scope="session")
def benign_system():
    return load_system(bundled("benign_system.json"))


@pytest.fixture(scope="session")
def benign_scenario(benign_system):
    return load_scenario(bundled("benign_scenario.json"), benign_system)


@pytest.fixture(scope="session")
def benign_start(benign_system):
    return initialize_equilibrium(benign_system)


@pytest.fixture(scope="session")
def counter_system():
    return load_system(bundled("counter_system.json"))


@pytest.fixture(scope="session")
def counter_scenario(counter_system):
    return load_scenario(bundled("counter_scenario.json"), counter_system)


@pytest.fixture(scope="session")
def quiet_scenario():
    return load_scenario(bundled("quiet_scenario.json"))


@pytest.fixture(scope="session")
def two_bus_system():
    return load_system(bundled("two_bus_system.json"))


@pytest.fixture
def tts():
    return two_timescale(eps=0.1, z0=1.0)


@pytest.fixture
def cfg() -> SimConfig:
    return SimConfig()
