from __future__ import annotations

import os
from pathlib import Path

import pytest
from hypothesis import settings

FIXTURES = Path(__file__).parent / "fixtures"

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_acceptance: dict[int, tuple[str, list[str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when != "call" and not (rep.failed or rep.skipped):
        return
    n, title = mark.args
    state = "FAIL" if rep.failed else "SKIP" if rep.skipped else "PASS"
    _acceptance.setdefault(n, (title, []))[1].append(state)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_acceptance):
        title, states = _acceptance[n]
        # any failing test fails the criterion; skipped sub-checks do not
        state = "FAIL" if "FAIL" in states else "PASS" if "PASS" in states else "SKIP"
        terminalreporter.write_line(f"criterion {n:2d} {state}: {title}")
