"""Acceptance gate: the ten criteria at their stated tolerances and budgets.

Run with ``pytest tests/test_acceptance.py -s`` or directly with
``python tests/test_acceptance.py`` for one pass/fail line per criterion.
"""

import os
import sys

import pytest

from loewner_lab import acceptance

SEED = int(os.environ.get("LOEWNER_LAB_SEED", "0"))
LINES = {}


@pytest.fixture(scope="module", autouse=True)
def compiled_kernels():
    acceptance.warm_up()


@pytest.mark.parametrize("number", acceptance.FULL)
def test_criterion(number):
    res = acceptance.run_criterion(number, SEED)
    LINES[number] = res.line()
    print(res.line())
    assert res.passed, res.line()


if __name__ == "__main__":
    acceptance.warm_up()
    results = acceptance.run_criteria(acceptance.FULL, SEED, echo=print)
    sys.exit(0 if all(r.passed for r in results) else 1)
