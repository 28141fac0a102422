import numpy as np
import pytest

from cdfnav.density import DensityFunction, ObstacleSpec, ShapingFunction

# Riccati solution for the Duffing oscillator linearised at (-1, 0), Q = I, R = 1
DUFFING_P = np.array([
    [2.5222563756923972, 0.23606797749979125],
    [0.23606797749979125, 1.1174300616460804],
])


@pytest.fixture
def duffing_density():
    return DensityFunction(
        [ObstacleSpec((0.0, 0.0), 0.5, 0.7)],
        ShapingFunction((-1.0, 0.0), DUFFING_P, 0.2),
        eta=0.1,
    )


@pytest.fixture
def dubin_density():
    return DensityFunction(
        [ObstacleSpec((3.0, 1.0), 2.0, 2.5), ObstacleSpec((7.5, -1.0), 2.0, 2.5)],
        ShapingFunction((11.0, -3.0), None, 0.2),
        eta=0.1,
    )


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
