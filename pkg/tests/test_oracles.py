from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from selfheal.oracles import (
    RunLengthQuery,
    check1_failure_bound,
    check1_failure_exact,
    corruption_budget,
    iterated_log,
    longest_run_curve,
    longest_run_enumerated,
    longest_run_prob,
    loglog_floor,
    report_lines,
    run_length_for,
)


@pytest.mark.parametrize("x, expect", [(1, 0), (2, 1), (4, 2), (16, 3), (65536, 4), (65537, 5), (1e10, 5), (14_116, 4)])
def test_iterated_log(x, expect):
    assert iterated_log(x) == expect


def test_iterated_log_of_huge_tower():
    # 2^65536 overflows a float; log2 of the exact integer is 65536
    assert 1 + iterated_log(65536) == 5


@pytest.mark.parametrize("n, expect", [(1024, 3), (14_116, 3), (30_509, 3), (65536, 4)])
def test_loglog(n, expect):
    assert loglog_floor(n) == expect


@pytest.mark.parametrize("x, expect", [(1, 1), (2, 1), (3, 2), (4, 2), (5, 3), (16, 4), (17, 5)])
def test_run_length_uses_ceiling(x, expect):
    assert run_length_for(x) == expect


def test_curve_maximum_frozen():
    curve = longest_run_curve(2**16, 0.25)
    assert curve.max() == pytest.approx(0.4375, abs=1e-12)
    assert curve.max() <= 0.5
    assert curve[0] == pytest.approx(0.25)


def test_exact_small_cases():
    # at least 2 tails in a row among 3 tosses, p = 1/4
    q = RunLengthQuery(3, Fraction(1, 4), 2)
    assert longest_run_prob(q) == Fraction(7, 64)
    assert longest_run_enumerated(3, Fraction(1, 4), 2) == Fraction(7, 64)


@pytest.mark.parametrize("x", range(1, 17))
def test_dp_matches_enumeration(x):
    q = RunLengthQuery(x, Fraction(1, 4))
    assert longest_run_prob(q) == longest_run_enumerated(x, Fraction(1, 4), q.length)


def test_check1_bounds_frozen():
    assert check1_failure_bound(11, 14_116) == pytest.approx(0.0579, abs=5e-5)
    assert check1_failure_exact(11, 14_116, 0.25) == pytest.approx(0.159, abs=5e-4)


def test_budget_frozen():
    assert corruption_budget(220, 14_116, 1) == 5940
    assert corruption_budget(882, 14_116, 1) == 23_814
    assert corruption_budget(10, 10**10, 2) == 750
    with pytest.raises(ValueError):
        corruption_budget(1, 100, 3)


def test_invalid_queries():
    with pytest.raises(ValueError):
        RunLengthQuery(0, 0.5)
    with pytest.raises(ValueError):
        RunLengthQuery(3, 1.5)
    with pytest.raises(ValueError):
        iterated_log(0.5)


def test_report_has_rows():
    rows = report_lines((1024,))
    assert any("budget CHECK1" in r for r in rows)


@settings(max_examples=60, deadline=None)
@given(x=st.integers(1, 12), num=st.integers(0, 8), run=st.integers(1, 6))
def test_dp_agrees_with_enumeration_everywhere(x, num, run):
    p = Fraction(num, 8)
    assert longest_run_prob(RunLengthQuery(x, p, run)) == longest_run_enumerated(x, p, run)


@settings(max_examples=30, deadline=None)
@given(x=st.integers(1, 400), p=st.floats(0.0, 1.0))
def test_float_dp_tracks_exact(x, p):
    exact = longest_run_prob(RunLengthQuery(x, Fraction(p)))
    approx = longest_run_prob(RunLengthQuery(x, p))
    assert float(exact) == pytest.approx(approx, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(x=st.integers(2, 300), run=st.integers(1, 8))
def test_probability_monotone_in_length(x, run):
    a = longest_run_prob(RunLengthQuery(x - 1, 0.25, run))
    b = longest_run_prob(RunLengthQuery(x, 0.25, run))
    assert b >= a - 1e-15
    assert np.isfinite(b)
