import sys

import pytest

from pdcqkd import ChannelParams, SourceParams
from pdcqkd.optimize import SweepSpec

# fiber and detector parameters of the reference telecom link
REF_LINK = dict(alpha=0.21, eta_B=0.045, p_d=8.5e-7, e_d=0.033)


def ref_channel(length_km=0.0, **changes):
    params = {**REF_LINK, **changes}
    return ChannelParams(params["alpha"], length_km, params["eta_B"], params["p_d"], params["e_d"])


def ref_source(mu=0.19, eta_A=0.5):
    return SourceParams(mu, eta_A, 1e-6)


@pytest.fixture
def channel20():
    return ref_channel(20.0)


@pytest.fixture
def source_a():
    return ref_source()


@pytest.fixture
def spec_a():
    return SweepSpec()


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(module.LINES):
        terminalreporter.write_line(module.LINES[number])
