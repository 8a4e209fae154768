import pytest


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(n, title): acceptance criterion number and title"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when != "call":
        return
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    status = "PASS" if rep.passed else "FAIL"
    number, title = marker.args
    # one visible line per acceptance criterion
    print(f"\n[criterion {number:>2}] {status}  {title}", flush=True)
