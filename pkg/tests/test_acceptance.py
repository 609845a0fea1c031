"""Exit criteria; run with ``pytest tests/test_acceptance.py -s`` to see one line per criterion."""

import pytest

from netentropy import acceptance


@pytest.mark.parametrize("criterion", acceptance.CRITERIA, ids=lambda fn: fn.__name__)
def test_criterion(criterion):
    result = criterion()
    print(result.line())
    assert result.passed, result.detail
    assert result.within_budget, f"took {result.seconds:.1f}s, budget {result.budget}s"


def test_perturbed_chain_fails_ergodicity_criterion():
    result = acceptance.criterion_5(perturb=True)
    print(result.line())
    assert not result.passed
