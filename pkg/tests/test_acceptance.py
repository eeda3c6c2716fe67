"""Acceptance criteria; run with ``-s`` to see one PASS/FAIL line each."""

import pytest

from twoway_qkd import acceptance


@pytest.mark.parametrize("number, name, fn", acceptance.CRITERIA, ids=[f"{n}-{name}" for n, name, _ in acceptance.CRITERIA])
def test_criterion(number, name, fn):
    result = acceptance.run_criterion(number)
    print(result.line())
    assert result.passed, result.line()
