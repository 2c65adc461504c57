import datetime as dt

import numpy as np
import pytest
from hypothesis import settings

from ceabc.data import generate_synthetic
from ceabc.ic import ICReference, VirginConfig, infer_initial_condition
from ceabc.model import NOMINAL

settings.register_profile("ceabc", deadline=None, max_examples=60)
settings.load_profile("ceabc")

TWIN_START = dt.date(2020, 5, 1)
TWIN_DAYS = 31
TWIN_OMEGA = 0.75
TWIN_REFS = (1000.0, 300.0)


def twin_initial_state(omega=TWIN_OMEGA):
    refs = [ICReference("H", TWIN_REFS[0]), ICReference("D", TWIN_REFS[1])]
    u0, _, _ = infer_initial_condition(VirginConfig(), refs, [omega, 1.0 - omega])
    return u0


@pytest.fixture(scope="session")
def twin_u0():
    return twin_initial_state()


@pytest.fixture(scope="session")
def twin_dataset(twin_u0):
    return generate_synthetic(twin_u0, NOMINAL, TWIN_START, TWIN_DAYS)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def report_line():
    """Record a one-line verdict that is echoed in the terminal summary."""

    def record(line):
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
