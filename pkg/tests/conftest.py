import numpy as np
import pytest

from singularpdo.spectral_core import GridSpec

ACCEPTANCE_LINES: list = []


def record_acceptance(line: str) -> None:
    """Store a criterion line so it is echoed in the terminal summary."""
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def torus_grid():
    return GridSpec("wavetrain", d=1, Nx=8, Kmax=3)


@pytest.fixture
def line_grid():
    return GridSpec("pulse", d=1, Nx=8, Theta=4.0, Ntheta=16)


@pytest.fixture(params=["wavetrain", "pulse"])
def small_grid(request):
    if request.param == "wavetrain":
        return GridSpec("wavetrain", d=1, Nx=8, Kmax=3)
    return GridSpec("pulse", d=1, Nx=8, Theta=4.0, Ntheta=16)
