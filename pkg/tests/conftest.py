"""Shared fixtures plus two small plugins.

``--req-report PATH`` writes one ``nodeid<TAB>outcome<TAB>TAGS`` line per
test that carries ``@pytest.mark.req(...)``; that file feeds ``cas matrix``.

Acceptance tests record their verdicts through the ``acceptance`` fixture;
a summary line per criterion is printed at the end of the session.
"""

from __future__ import annotations

from pathlib import Path

import pytest

from uavcas import sim_harness
from uavcas.traceability import format_report

SCENARIO_DIR = Path(sim_harness.__file__).parent / "scenarios"
NOMINAL = sorted(SCENARIO_DIR.glob("*.scn"))
FAULTS = sorted((SCENARIO_DIR / "faults").glob("*.scn"))

_req_results: dict[str, tuple[str, tuple[str, ...]]] = {}
_acceptance: dict[int, tuple[bool, str]] = {}


def pytest_addoption(parser):
    parser.addoption("--req-report", default=None, help="write requirement-tagged test outcomes here")


def _tags(item) -> tuple[str, ...]:
    tags = []
    for mark in item.iter_markers("req"):
        tags.extend(mark.args)
    return tuple(sorted(set(tags)))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    tags = _tags(item)
    if not tags:
        return
    if rep.when == "call" or not rep.passed:
        # a failing setup/teardown overrides a passing call
        if _req_results.get(item.nodeid, ("",))[0] != "failed":
            _req_results[item.nodeid] = (rep.outcome, tags)


def pytest_sessionfinish(session, exitstatus):
    path = session.config.getoption("--req-report")
    if path and _req_results:
        rows = [(nodeid, outcome, tags) for nodeid, (outcome, tags) in _req_results.items()]
        Path(path).write_text(format_report(rows), encoding="utf-8")


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_acceptance):
        ok, detail = _acceptance[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


class AcceptanceRecorder:
    def __call__(self, number: int, ok: bool, detail: str) -> None:
        _acceptance[number] = (bool(ok), detail)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def acceptance():
    return AcceptanceRecorder()


@pytest.fixture(scope="session")
def nominal_runs():
    out = {}
    for path in NOMINAL:
        scn = sim_harness.load_scenario_file(path)
        out[scn.name] = sim_harness.run(scn)
    return out


@pytest.fixture(scope="session")
def fault_runs():
    out = {}
    for path in FAULTS:
        scn = sim_harness.load_scenario_file(path)
        out[scn.name] = sim_harness.run(scn)
    return out


@pytest.fixture(scope="session")
def head_on():
    return sim_harness.load_scenario_file(SCENARIO_DIR / "head_on.scn")
