"""Acceptance criteria: one printed PASS/FAIL line per criterion.

Run ``pytest -s tests/test_acceptance.py`` to see the lines; each criterion is
also a separate test so failures are reported individually.
"""

import pytest

from realign.bench import SUITES

_results = {}


def _result(name):
    if name not in _results:
        _results[name] = SUITES[name]()
        print("\n" + _results[name].line())
    return _results[name]


@pytest.mark.parametrize("name", list(SUITES))
def test_criterion(name):
    r = _result(name)
    assert r.seconds <= r.time_limit, f"{r.name} took {r.seconds:.2f}s (limit {r.time_limit}s)"
    assert r.passed, r.line()


def test_summary(capsys):
    lines = [_result(name).line() for name in SUITES]
    with capsys.disabled():
        print("\nacceptance summary")
        for line in lines:
            print(line)
    assert len(lines) == 12
