import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "holocurv", deadline=None, max_examples=20, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("holocurv")

CRITERIA = {
    1: "Gauss-Bonnet anchor on CP^1",
    2: "lambda constants on CP^1, CP^2, CP^3",
    3: "equality at the optimum on CP^1",
    4: "projective margin on CP^2",
    5: "degree family z^d",
    6: "degeneracy equality on CP^1 and tori",
    7: "Berger identity on CP^2",
    8: "Chern-Lu residual non-negative",
    9: "flow classifier truth table and limsup",
    10: "property suites",
}

_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n = marker.args[0]
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        prev = _outcomes.get(n, True)
        _outcomes[n] = prev and rep.passed


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        status = "PASS" if _outcomes[n] else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d} {status}  {CRITERIA[n]}")
