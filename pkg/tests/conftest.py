import numpy as np
import pytest

from polysmooth.linalg import GaussianBelief

_CRITERIA = {}
_DETAILS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    name = marker.args[0]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA[item.nodeid] = (name, report.outcome)


@pytest.fixture
def detail(request):
    """Attach a measured-value string to the acceptance summary line of this test."""

    def note(text):
        _DETAILS[request.node.nodeid] = text

    return note


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, (name, outcome) in _CRITERIA.items():
        status = "PASS" if outcome == "passed" else "FAIL"
        extra = _DETAILS.get(nodeid, "")
        terminalreporter.write_line(f"{status}  {name}" + (f"  [{extra}]" if extra else ""))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_spd(rng, n, condition=100.0):
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eig = np.geomspace(1.0, 1.0 / condition, n) * rng.uniform(0.5, 2.0)
    return (q * eig) @ q.T


def random_gaussian(rng, n, scale=1.0):
    return GaussianBelief(rng.normal(0.0, scale, n), random_spd(rng, n, 50.0))
