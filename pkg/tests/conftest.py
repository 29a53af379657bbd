import dataclasses

import pytest

from schrodlab.harness import load_or_build
from schrodlab.lattice import build_frequency_set, build_params

R_MIN = 12.0 ** 5  # smallest R of the default sweep

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def lab_inputs(request):
    """Bump profile and constants, cached across pytest sessions."""
    cache = request.config.cache.mkdir("schrodlab") / "profile-n2.json"
    return load_or_build(2, R_MIN, 1000, cache=cache)


@pytest.fixture(scope="session")
def profile(lab_inputs):
    return lab_inputs[0]


@pytest.fixture(scope="session")
def constants(lab_inputs):
    return lab_inputs[1]


@pytest.fixture(scope="session")
def toy(profile, constants):
    """m = 3, sigma = 0.2 (R = 243, five frequencies) with the scale floor lifted."""
    params = build_params(2, 0.2, 3, 0.1, dataclasses.replace(constants, r_min=1.0))
    return params, build_frequency_set(params)


@pytest.fixture(scope="session")
def m20(constants):
    params = build_params(2, 0.2, 20, 0.15, constants)
    return params, build_frequency_set(params)


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split()[0])):
            terminalreporter.write_line(line)
