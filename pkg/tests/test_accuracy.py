"""
Tests for stability, accuracy engines and the threshold dynamic program.
"""

import logging
import math
import time

import numpy as np
import pytest

from noisy_choice.accuracy import (
    AccuracyReport,
    DpMemoTable,
    HashDpMemoTable,
    _fill_query_row,
    accuracy_closed_form,
    accuracy_dp,
    accuracy_exact,
    accuracy_via_level_sets,
    asymptotic_majority_accuracy,
    dp_noise_operator,
    majority_bounds,
    needed_ones,
    stability,
    stability_spectral,
)
from noisy_choice.bf_core import make_family
from noisy_choice.noise import RhoParam


def test_majority_three_accuracy():
    f = make_family("majority", 3)

    assert stability(f, 0.5) == pytest.approx(0.40625)
    assert stability_spectral(f, 0.5) == pytest.approx(0.40625)
    report = accuracy_exact(f, 0.5)
    assert report.accuracy == pytest.approx(0.703125)
    assert report.method == "exact_spectral"
    assert accuracy_via_level_sets(f, 0.5).accuracy == pytest.approx(0.703125)


def test_closed_forms():
    assert accuracy_closed_form("and", 2, 0.5).accuracy == pytest.approx(0.78125)
    assert accuracy_closed_form("or", 2, 0.5).accuracy == pytest.approx(0.78125)
    assert accuracy_closed_form("dictator", 7, 0.5).accuracy == pytest.approx(0.75)


def test_closed_forms_match_exact():
    for kind in ("and", "or"):
        for n in range(1, 9):
            for rho in (0.0, 0.3, 0.9, 1.0):
                expected = accuracy_exact(make_family(kind, n), rho).accuracy
                assert accuracy_closed_form(kind, n, rho).accuracy == pytest.approx(expected, abs=1e-12)


def test_closed_form_for_large_n():
    """AND accuracy tends to 1 once 2^(1-n) underflows."""
    assert accuracy_closed_form("and", 5000, 0.5).accuracy == 1.0


def test_closed_form_rejects_unknown_kind():
    with pytest.raises(ValueError) as exc_info:
        accuracy_closed_form("majority", 3, 0.5)

    assert "Available kinds" in str(exc_info.value)


def test_accuracy_report_validation():
    with pytest.raises(ValueError):
        AccuracyReport(stability=0.1, method="guess")

    with pytest.raises(ValueError) as exc_info:
        AccuracyReport(stability=0.1, method="dp_memo", ci_halfwidth=0.01)

    assert "monte_carlo" in str(exc_info.value)


def test_accuracy_report_round_trip():
    report = AccuracyReport.from_accuracy(0.75, "closed_form")

    assert report.stability == pytest.approx(0.5)
    assert report.to_dict()["accuracy"] == pytest.approx(0.75)


def test_needed_ones():
    assert needed_ones(0, 3) == 2
    assert needed_ones(-1, 0) == 0
    assert needed_ones(1, 4) == 3


def test_dp_base_case():
    """With no coordinates the sum is 0."""
    assert dp_noise_operator(-1, 0, 0, 0.5) == 1.0
    assert dp_noise_operator(0, 0, 0, 0.5) == 0.0


def test_dp_matches_noise_operator():
    """P[maj3(y) = 1] is (1 + T_ρ maj3(x)) / 2."""
    assert dp_noise_operator(0, 3, 3, 0.5) == pytest.approx(0.84375)
    assert dp_noise_operator(0, 1, 3, 0.5) == pytest.approx(0.65625)


def test_dp_rejects_impossible_sums():
    with pytest.raises(ValueError) as exc_info:
        dp_noise_operator(0, 2, 3, 0.5)

    assert "not the sum" in str(exc_info.value)


def test_dp_rejects_foreign_memo():
    with pytest.raises(ValueError) as exc_info:
        dp_noise_operator(0, 1, 3, 0.3, memo=DpMemoTable(0.5))

    assert "bound to rho=0.5" in str(exc_info.value)


def test_dp_matches_exact_for_thresholds():
    memo = DpMemoTable(0.4)
    for n in range(1, 11):
        for theta in range(-2, 3):
            if abs(theta) > n:
                continue
            expected = accuracy_exact(make_family("threshold", n, theta=theta), 0.4).accuracy
            assert accuracy_dp(theta, n, 0.4, memo).accuracy == pytest.approx(expected, abs=1e-12)


def test_dp_hash_and_dense_memos_agree():
    dense = accuracy_dp(1, 21, 0.7, DpMemoTable(0.7)).accuracy
    hashed = accuracy_dp(1, 21, 0.7, HashDpMemoTable(0.7)).accuracy

    assert dense == pytest.approx(hashed, abs=1e-14)


def test_dp_memo_is_reused():
    """A repeated query is answered from the memo."""
    memo = DpMemoTable(0.5)
    first = accuracy_dp(0, 31, 0.5, memo)
    expansions = memo.expansions

    second = accuracy_dp(0, 31, 0.5, memo)

    assert memo.expansions == expansions
    assert memo.hits > 0
    assert second.accuracy == first.accuracy
    assert len(memo) > 0


def test_dp_with_zero_retention_still_answers(caplog):
    with caplog.at_level(logging.WARNING, logger="noisy_choice.accuracy"):
        limited = dp_noise_operator(1, 3, 41, 0.6, DpMemoTable(0.6, retain=0))

    assert limited == pytest.approx(dp_noise_operator(1, 3, 41, 0.6), abs=1e-14)
    assert "retention limit" in caplog.text


def test_accuracy_dp_without_memo_retains_nothing(caplog):
    with caplog.at_level(logging.WARNING, logger="noisy_choice.accuracy"):
        accuracy_dp(0, 301, 0.9)

    assert not [record for record in caplog.records if record.levelno >= logging.WARNING]


def test_query_row_matches_single_queries():
    """The bottom-up row and the stack recursion give the same probabilities."""
    rho = RhoParam(0.3)
    n, theta = 15, 1
    row, computed = _fill_query_row(n, needed_ones(theta, n), rho.keep_prob, rho.flip_prob)

    singles = [dp_noise_operator(theta, 2 * k - n, n, rho) for k in range(n + 1)]

    np.testing.assert_allclose(row, singles, atol=1e-14)
    assert computed > 0


def test_accuracy_dp_validation():
    with pytest.raises(ValueError):
        accuracy_dp(0, 0, 0.5)

    with pytest.raises(ValueError) as exc_info:
        accuracy_dp(5, 3, 0.5)

    assert "|theta|" in str(exc_info.value)


def test_majority_accuracy_decreases_with_n():
    memo = DpMemoTable(0.9)
    accuracies = [accuracy_dp(0, n, 0.9, memo).accuracy for n in range(1, 102, 2)]

    assert all(a > b for a, b in zip(accuracies, accuracies[1:]))
    assert accuracies[-1] > asymptotic_majority_accuracy(0.9)


def test_majority_bounds():
    lower, upper = majority_bounds(101, 0.9, constant=1.0)

    assert lower == pytest.approx(0.85643, abs=1e-5)
    assert upper == pytest.approx(lower + 1.0 / (math.sqrt(1 - 0.81) * math.sqrt(101)))


def test_majority_bounds_use_environment_constant(monkeypatch):
    monkeypatch.setenv("NOISY_CHOICE_BOUND_CONSTANT", "0.5")
    lower, upper = majority_bounds(1, 0.0)

    assert lower == pytest.approx(0.5)
    assert upper == pytest.approx(1.0)


def test_majority_bounds_validation():
    with pytest.raises(ValueError):
        majority_bounds(4, 0.5)

    with pytest.raises(ValueError) as exc_info:
        majority_bounds(3, 1.0)

    assert "singular" in str(exc_info.value)


def test_dp_reaches_a_thousand_voters():
    """Majority on 1001 voters stays between its bounds in well under a second."""
    start = time.perf_counter()
    report = accuracy_dp(0, 1001, 0.9)
    elapsed = time.perf_counter() - start

    lower, upper = majority_bounds(1001, 0.9, constant=1.0)
    assert lower < report.accuracy < upper
    assert elapsed < 1.0
