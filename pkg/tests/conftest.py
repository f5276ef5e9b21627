import numpy as np
import pytest

from vortex_body.geometry import make_disk, make_fourier_body
from vortex_body.potentials import assemble

FOURIER = [(1.0, 0.0), (0.0, 0.0), (0.2, 0.0)]


@pytest.fixture(scope="session")
def disk():
    return make_disk(1.0, 128, 1.0, 0.5)


@pytest.fixture(scope="session")
def disk_tables(disk):
    """Closed-form fields for the unit disk."""
    return assemble(disk, analytic=True)


@pytest.fixture(scope="session")
def disk_bem(disk):
    """Boundary-integral fields for the unit disk."""
    return assemble(disk, analytic=False)


@pytest.fixture(scope="session")
def fourier_body():
    return make_fourier_body(FOURIER, 128, 2.0, 1.0)


@pytest.fixture(scope="session")
def fourier_tables(fourier_body):
    return assemble(fourier_body)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE = []


def report(number, title, ok, detail):
    """Record and print one acceptance line."""
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {title}: {detail}"
    ACCEPTANCE.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)
