import math

import pytest

from weylscat import CoefficientProfile, LeadSpec, ScatteringSystem

PI = math.pi


def free_profile():
    return CoefficientProfile.constant(0.0, PI, 0.5, 0.0)


def barrier_profile(height=2.0):
    return CoefficientProfile.constant(0.0, PI, 0.5, height)


def two_segment_profile():
    return CoefficientProfile.piecewise(0.0, [1.2, PI - 1.2], [0.5, 0.2], [0.0, 0.7])


def leads(v_l=0.0, v_r=0.0, m=0.5):
    return LeadSpec("left", m, v_l), LeadSpec("right", m, v_r)


def free_system():
    return ScatteringSystem(free_profile(), *leads())


def barrier_system():
    return ScatteringSystem(barrier_profile(), *leads())


def one_channel_system():
    return ScatteringSystem(free_profile(), *leads(1.0, 0.0))


@pytest.fixture
def f0():
    return free_profile()


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
