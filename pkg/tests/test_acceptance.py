"""Acceptance criteria at full workload.

Every criterion runs at its stated size and tolerance; the heavy simulations
are shared through one module-scoped suite. Each test prints a single
PASS/FAIL line, and the lines are repeated in the terminal summary.

Expect about 13 minutes on one core.
"""
import pytest

from dynrgg.validation import Suite, ValidationSettings

pytestmark = pytest.mark.slow

RESULTS = {}


@pytest.fixture(scope="module")
def suite():
    return Suite(ValidationSettings())


@pytest.mark.parametrize("cid", range(1, 12))
def test_criterion(suite, cid, capsys):
    result = suite.run([cid])[0]
    RESULTS[cid] = result
    with capsys.disabled():
        print("\n" + result.line(), f"({result.seconds:.1f}s)")
    assert result.passed, result.line()
