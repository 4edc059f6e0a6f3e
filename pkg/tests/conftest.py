import pytest

CRITERIA = {
    1: "GF backend equivalence",
    2: "field laws",
    3: "code construction",
    4: "end-to-end round trip",
    5: "cipher known answers",
    6: "individual secrecy audit",
    7: "AES pipeline throughput",
    8: "AES pipeline energy/bit",
    9: "ECC pipeline throughput and energy",
    10: "wire robustness",
}

_results: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number k")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call" and not rep.failed:
        return
    k = marker.args[0]
    ok = rep.passed if rep.when == "call" else False
    _results[k] = _results.get(k, True) and ok


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        if k in _results:
            status = "PASS" if _results[k] else "FAIL"
            terminalreporter.write_line(f"AC{k:<2} {status}  {CRITERIA[k]}")
