import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from physdyn.body import KinematicTree, MassConfig, RestBody  # noqa: E402
from physdyn.humanoid import make_humanoid  # noqa: E402
from physdyn.massprops import body_mass_properties  # noqa: E402
from physdyn.shapes import box, cube  # noqa: E402


@pytest.fixture(scope="session")
def humanoid():
    return make_humanoid()


@pytest.fixture(scope="session")
def humanoid_props(humanoid):
    return body_mass_properties(humanoid)


@pytest.fixture
def rng():
    return np.random.default_rng(20241016)


def single_cube_body(side=1.0, center=(0.0, 0.0, 0.0), contacts=(), density=1000.0):
    tree = KinematicTree((None,), np.array([center], dtype=float))
    mesh = cube(side, center)
    return RestBody(tree, (mesh,), (list(contacts),), MassConfig(total_kg=1.0, mode="uniform-density",
                                                                   density_kg_m3=density))


def two_link_body():
    """Two 1 m links along +x; the second hinges at x = 1."""
    tree = KinematicTree((None, 0), np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]))
    meshes = (box((0.0, -0.05, -0.05), (1.0, 0.05, 0.05), 0), box((1.0, -0.05, -0.05), (2.0, 0.05, 0.05), 1))
    return RestBody(tree, meshes, ([], [0, 1]), MassConfig(total_kg=2.0, fractions=np.array([0.5, 0.5])))


@pytest.fixture
def cube_body():
    return single_cube_body()


@pytest.fixture
def chain_body():
    return two_link_body()


# -- acceptance summary ----------------------------------------------------------

_SESSION = {"start": time.perf_counter(), "criteria": {}}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    # fixture setup counts toward the criterion's runtime
    spent = _SESSION.setdefault("setup", {})
    if report.when == "setup":
        spent[item.nodeid] = report.duration
        if report.outcome != "passed":
            _SESSION["criteria"][mark.args[0]] = (mark.args[1], report.outcome, report.duration)
    elif report.when == "call":
        number, title = mark.args
        _SESSION["criteria"][number] = (title, report.outcome, report.duration + spent.get(item.nodeid, 0.0))


def pytest_terminal_summary(terminalreporter):
    criteria = _SESSION["criteria"]
    if not criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(criteria):
        title, outcome, duration = criteria[number]
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number:2d}: {title} ({duration:.1f} s)")
    elapsed = time.perf_counter() - _SESSION["start"]
    status = "PASS" if elapsed < 300 else "FAIL"
    terminalreporter.write_line(f"[{status}] suite wall-clock {elapsed:.1f} s (limit 300 s)")
