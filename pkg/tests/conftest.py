import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lqgchip import interferometer, lqg_core  # noqa: E402


@pytest.fixture(scope="session")
def tensor():
    return lqg_core.build_vertex_tensor()


@pytest.fixture(scope="session")
def gate(tensor):
    return lqg_core.gate_from_tensor(tensor)


@pytest.fixture(scope="session")
def unitary(gate):
    return interferometer.dilate(gate)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_su2(rng):
    u = lqg_core.haar_unitary(2, rng)
    return u / np.sqrt(np.linalg.det(u))


def random_boundary(rng):
    theta = rng.uniform(0, np.pi, 5)
    phi = rng.uniform(0, 2 * np.pi, 5)
    return lqg_core.BoundaryState.from_angles(list(zip(theta, phi)))


_acceptance = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and (report.when == "call" or report.outcome != "passed"):
        measured = dict(report.user_properties).get("measured", "")
        name = report.nodeid.split("::")[-1]
        _acceptance[name] = ("PASS" if report.passed else "FAIL", measured)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance):
        outcome, measured = _acceptance[name]
        number = int(name.split("_")[2])
        label = name.split("_", 3)[3].replace("_", " ")
        terminalreporter.write_line(f"ACCEPTANCE {number:2d} {outcome}  {label}: {measured}")
