from pathlib import Path

import pytest

from snnverif.dtmc import build_dtmc
from snnverif.snnrf import load_snnrf

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"

FIXTURE_NAMES = ("single_neuron", "contralateral_inhibition", "cec_single_spike", "cec_both_required")


def fixture_path(name: str) -> Path:
    return FIXTURES / f"{name}.yaml"


def load(name: str):
    spec, warnings = load_snnrf(fixture_path(name))
    assert not warnings
    return spec


_DTMCS: dict = {}


def dtmc_of(name: str):
    if name not in _DTMCS:
        _DTMCS[name] = build_dtmc(load(name))
    return _DTMCS[name]


@pytest.fixture(scope="session")
def single():
    return load("single_neuron")


@pytest.fixture(scope="session")
def ci():
    return load("contralateral_inhibition")


@pytest.fixture(scope="session")
def single_dtmc():
    return dtmc_of("single_neuron")


@pytest.fixture(scope="session")
def ci_dtmc():
    return dtmc_of("contralateral_inhibition")
