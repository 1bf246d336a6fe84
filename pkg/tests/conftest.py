import numpy as np
import pytest

from dsctrl.lti import spectral_abscissa

_ACCEPTANCE = []


def random_stable(rng, n, margin=0.5):
    """Gaussian matrix shifted so its abscissa is at most -margin."""
    a = rng.standard_normal((n, n)) / np.sqrt(n)
    return a - (spectral_abscissa(a) + margin + rng.uniform(0, 1)) * np.eye(n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _ACCEPTANCE.append((marker.args[0], marker.args[1], rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    merged = {}
    for cid, desc, outcome in _ACCEPTANCE:
        d, ok, count = merged.get(cid, (desc, True, 0))
        merged[cid] = (d, ok and outcome == "passed", count + 1)
    for cid in sorted(merged):
        desc, ok, count = merged[cid]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] AC{cid}: {desc} ({count} checks)")
