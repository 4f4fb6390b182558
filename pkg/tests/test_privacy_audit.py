"""
Tests for the exhaustive privacy audit.
"""

import math

import numpy as np
import pytest

from noisy_choice.bf_core import BitVector, make_family, random_table
from noisy_choice.config import CapExceededError
from noisy_choice.privacy_audit import audit, output_distribution, tightness_condition


def test_dictator_is_tight():
    report = audit(make_family("dictator", 3, i=2), 0.5)

    assert report.max_log_ratio == pytest.approx(math.log(3))
    assert report.epsilon_bound == pytest.approx(math.log(3))
    assert report.tight
    assert report.attained_at.neighbor_index == 2


def test_majority_three_is_not_tight():
    """Worst ratio for maj3 at ρ = 0.5 is 0.6875/0.3125 = 2.2."""
    report = audit(make_family("majority", 3), 0.5)

    assert report.max_log_ratio == pytest.approx(math.log(2.2))
    assert not report.tight
    assert report.max_log_ratio < report.epsilon_bound


def test_constant_has_zero_ratio():
    report = audit(make_family("constant", 4, value=1), 0.7)

    assert report.max_log_ratio == 0.0
    assert not report.tight


def test_exact_audit_matches_float_audit():
    f = make_family("majority", 5)
    floating = audit(f, 0.25)
    exact = audit(f, 0.25, exact=True)

    assert exact.exact
    assert exact.max_log_ratio == pytest.approx(floating.max_log_ratio, abs=1e-12)
    assert audit(make_family("dictator", 4, i=4), 0.5, exact=True).tight


def test_bound_holds_for_random_functions():
    rng = np.random.default_rng(99)
    for n in range(1, 9):
        f = random_table(n, rng)
        for rho in (0.1, 0.5, 0.9):
            report = audit(f, rho)
            assert report.max_log_ratio <= report.epsilon_bound + 1e-9


def test_audit_rejects_degenerate_rho():
    for rho in (0.0, 1.0):
        with pytest.raises(ValueError) as exc_info:
            audit(make_family("majority", 3), rho)

        assert "0 < rho < 1" in str(exc_info.value)


def test_audit_respects_caps(monkeypatch):
    with pytest.raises(CapExceededError) as exc_info:
        audit(make_family("parity", 11), 0.5, exact=True)

    assert exc_info.value.cap_name == "exact_audit"

    monkeypatch.setenv("NOISY_CHOICE_AUDIT_MAX_N", "3")
    with pytest.raises(CapExceededError) as exc_info:
        audit(make_family("majority", 5), 0.5)

    assert "NOISY_CHOICE_AUDIT_MAX_N" in str(exc_info.value)


def test_report_to_dict():
    record = audit(make_family("dictator", 2, i=1), 0.5).to_dict()

    assert record["tight"] is True
    assert len(record["attained_at"]["x"]) == 2


def test_output_distribution_sums_to_one():
    f = make_family("majority", 5)
    for bits in range(32):
        distribution = output_distribution(f, BitVector(5, bits), 0.4)
        assert sum(distribution.values()) == pytest.approx(1.0)


def test_output_distribution_for_majority():
    distribution = output_distribution(make_family("majority", 3), BitVector.from_votes([1, 1, 1]), 0.5)

    assert distribution == pytest.approx({1.0: 0.84375, -1.0: 0.15625})


def test_output_distribution_drops_impossible_outputs():
    distribution = output_distribution(make_family("constant", 2, value=-1), BitVector(2, 3), 0.5)

    assert distribution == pytest.approx({-1.0: 1.0})


def test_output_distribution_dimension_mismatch():
    with pytest.raises(ValueError) as exc_info:
        output_distribution(make_family("majority", 3), BitVector(2, 0), 0.5)

    assert "Dimension mismatch" in str(exc_info.value)


def test_tightness_condition():
    assert tightness_condition(make_family("dictator", 4, i=3))
    assert tightness_condition(make_family("and", 3))
    assert not tightness_condition(make_family("majority", 3))
    assert not tightness_condition(make_family("parity", 3))


def test_tightness_condition_matches_audit():
    rng = np.random.default_rng(5)
    tables = [random_table(n, rng) for n in range(1, 7) for _ in range(10)]
    tables += [make_family("and", 4), make_family("or", 5), make_family("threshold", 4, theta=2)]
    for f in tables:
        assert tightness_condition(f) == audit(f, 0.5).tight
