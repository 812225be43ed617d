"""Acceptance suite: one test per criterion, each printing a single pass/fail line."""

import pytest

from nctorus.acceptance import CRITERIA, Settings, buggy_product, invariant_suite

SETTINGS = Settings()


def _run(i, capsys):
    rec = CRITERIA[i - 1](SETTINGS)
    with capsys.disabled():
        print("\n" + rec.line())
    assert rec.criterion == i
    return rec


@pytest.mark.parametrize("i", range(1, 13), ids=lambda i: f"criterion_{i:02d}")
def test_criterion(i, capsys):
    rec = _run(i, capsys)
    assert rec.passed, rec.to_json()


def test_invariant_suite(capsys):
    recs = invariant_suite(SETTINGS.seed)
    with capsys.disabled():
        for r in recs:
            print("\n" + r.line())
    assert all(r.passed for r in recs)


def test_phase_mutation_is_caught():
    rec = CRITERIA[1](Settings(product=buggy_product))
    assert not rec.passed
