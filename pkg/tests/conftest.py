import pytest

from spin7_instantons.geometry import bs_flow


@pytest.fixture(scope="session")
def flow100():
    return bs_flow(1.0, r_max=100.0)


@pytest.fixture(scope="session")
def flow1000():
    return bs_flow(1.0, r_max=1000.0)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
