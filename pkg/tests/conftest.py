import math

import pytest

from biphoton_g2.physics import DispersiveFibre, SpdcSource, TimeGrid, eo_delay, spread_width

PS = 1e-12
NS = 1e-9
CM = 1e-2

# reference parameter set: k''=3.2e-28 s^2/cm, z=250 m, D=1.5 ps/cm, L=0.05 cm
K2 = 3.2e-28 / CM
Z = 250.0
D = 1.5 * PS / CM
L = 0.05 * CM

ACCEPTANCE_LINES = []


@pytest.fixture
def source():
    return SpdcSource(L, D)


@pytest.fixture
def fibre():
    return DispersiveFibre(0.0, K2, Z)


@pytest.fixture
def tau0(source):
    return eo_delay(source)


@pytest.fixture
def tau_f(source, fibre):
    return spread_width(fibre, eo_delay(source))


@pytest.fixture
def grid(tau_f):
    return TimeGrid.symmetric(5 * tau_f)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
