from __future__ import annotations

import re

import pytest

from emo_nmr.config import canonical_config

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")
_results: dict[int, tuple[str, str, str]] = {}


@pytest.fixture(scope="session")
def cfg():
    return canonical_config()


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = "; ".join(f"{k}={v}" for k, v in report.user_properties)
        _results[int(m.group(1))] = (m.group(2), "PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_results):
        name, status, detail = _results[n]
        tr.write_line(f"{status} criterion {n:2d} {name}" + (f"  [{detail}]" if detail else ""))
    passed = sum(1 for v in _results.values() if v[1] == "PASS")
    tr.write_line(f"{passed}/{len(_results)} criteria pass")
