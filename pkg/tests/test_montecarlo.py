"""
Tests for the seeded Monte-Carlo estimators.
"""

import math

import numpy as np
import pytest

from noisy_choice.accuracy import accuracy_dp
from noisy_choice.bf_core import make_family
from noisy_choice.montecarlo import (
    MIN_SAMPLES,
    EstimatorConfig,
    family_evaluator,
    mc_accuracy,
    mc_probabilistic_influence,
    mc_welfare,
    pointwise_evaluator,
    proportion_halfwidth,
    table_evaluator,
)


def _all_profiles(n: int) -> np.ndarray:
    bits = np.arange(1 << n)[:, None] >> np.arange(n)[None, :] & 1
    return (bits * 2 - 1).astype(np.int8)


def _sigma(p: float, samples: int) -> float:
    return math.sqrt(p * (1 - p) / samples)


def test_evaluators_agree_with_tables():
    votes = _all_profiles(5)
    for kind, params in [("majority", {}), ("and", {}), ("or", {}), ("parity", {}),
                         ("dictator", {"i": 4}), ("threshold", {"theta": 1}),
                         ("constant", {"value": -1})]:
        expected = make_family(kind, 5, **params).signs()
        assert list(family_evaluator(kind, 5, **params)(votes)) == list(expected)
        assert list(table_evaluator(make_family(kind, 5, **params))(votes)) == list(expected)


def test_pointwise_evaluator():
    f = make_family("majority", 3)
    evaluate = pointwise_evaluator(f)

    assert list(evaluate(_all_profiles(3))) == list(f.signs())


def test_family_evaluator_validation():
    with pytest.raises(ValueError):
        family_evaluator("majority", 4)

    with pytest.raises(ValueError) as exc_info:
        family_evaluator("threshold", 4)

    assert "requires theta" in str(exc_info.value)


def test_mc_accuracy_is_close_to_exact():
    cfg = EstimatorConfig(samples=20_000, seed=3)
    report = mc_accuracy(family_evaluator("majority", 3), 3, 0.5, cfg)

    assert report.method == "monte_carlo"
    assert report.ci_halfwidth > 0
    assert abs(report.accuracy - 0.703125) <= 4 * _sigma(0.703125, cfg.samples)


def test_mc_accuracy_for_many_voters():
    """Majority on 101 voters, checked against the dynamic program."""
    cfg = EstimatorConfig(samples=20_000, seed=11, shards=4)
    expected = accuracy_dp(0, 101, 0.9).accuracy
    report = mc_accuracy(family_evaluator("majority", 101), 101, 0.9, cfg)

    assert abs(report.accuracy - expected) <= 4 * _sigma(expected, cfg.samples)


def test_mc_is_reproducible_across_worker_counts():
    f_eval = family_evaluator("majority", 7)
    serial = mc_accuracy(f_eval, 7, 0.4, EstimatorConfig(samples=8_000, seed=21, shards=4, workers=1))
    threaded = mc_accuracy(f_eval, 7, 0.4, EstimatorConfig(samples=8_000, seed=21, shards=4, workers=4))

    assert serial == threaded


def test_mc_same_seed_same_estimate():
    cfg = EstimatorConfig(samples=5_000, seed=8, chunk_size=700)
    f_eval = family_evaluator("or", 4)

    assert mc_accuracy(f_eval, 4, 0.2, cfg) == mc_accuracy(f_eval, 4, 0.2, cfg)


def test_mc_needs_enough_samples():
    with pytest.raises(ValueError) as exc_info:
        mc_accuracy(family_evaluator("majority", 3), 3, 0.5, EstimatorConfig(samples=MIN_SAMPLES - 1, seed=0))

    assert str(MIN_SAMPLES) in str(exc_info.value)


def test_mc_without_noise_is_exact():
    report = mc_accuracy(family_evaluator("parity", 6), 6, 1.0, EstimatorConfig(samples=1_000, seed=0))

    assert report.accuracy == 1.0
    assert report.ci_halfwidth == 0.0


def test_estimator_config_validation():
    with pytest.raises(ValueError) as exc_info:
        EstimatorConfig(samples=1_000, seed=0, shards=3)

    assert "split evenly" in str(exc_info.value)

    with pytest.raises(ValueError):
        EstimatorConfig(samples=1_000, seed=0, confidence=0.9)

    with pytest.raises(ValueError):
        EstimatorConfig(samples=1_000, seed=0, workers=0)


def test_confidence_intervals_are_calibrated():
    """Roughly 95% of 95% intervals cover the exact accuracy."""
    expected = 0.703125
    f_eval = family_evaluator("majority", 3)
    covered = 0
    runs = 200
    for seed in range(runs):
        report = mc_accuracy(f_eval, 3, 0.5, EstimatorConfig(samples=2_000, seed=seed))
        covered += abs(report.accuracy - expected) <= report.ci_halfwidth
    assert covered / runs >= 0.90


def test_halfwidth_shrinks_like_inverse_root_n():
    f_eval = family_evaluator("majority", 5)
    sizes = [1_000, 4_000, 16_000, 64_000]
    widths = [mc_accuracy(f_eval, 5, 0.3, EstimatorConfig(samples=m, seed=5)).ci_halfwidth for m in sizes]

    slope = np.polyfit(np.log(sizes), np.log(widths), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.1)


def test_proportion_halfwidth_edges():
    assert proportion_halfwidth(0.0, 500, 1.96) == 0.0
    assert proportion_halfwidth(1.0, 500, 1.96) == 0.0
    # Near the boundary the Wilson interval is used
    assert 0.0 < proportion_halfwidth(0.001, 1_000, 1.96) < 0.01


def test_mc_welfare():
    cfg = EstimatorConfig(samples=40_000, seed=2)
    value, halfwidth = mc_welfare(family_evaluator("majority", 3), 3, 0.5, cfg)

    assert value.basis == "mechanism"
    assert abs(value.value - 0.75) <= 2.5 * halfwidth


def test_mc_probabilistic_influence():
    cfg = EstimatorConfig(samples=40_000, seed=4)
    estimate = mc_probabilistic_influence(family_evaluator("majority", 3), 1, 3, 0.5, cfg)

    assert estimate.samples == cfg.samples
    assert abs(estimate.value - 0.3125) <= 4 * _sigma(0.3125, cfg.samples)


def test_mc_probabilistic_influence_rejects_bad_voter():
    with pytest.raises(ValueError):
        mc_probabilistic_influence(family_evaluator("majority", 3), 4, 3, 0.5, EstimatorConfig(samples=1_000, seed=0))


def test_million_sample_estimates_on_majority_three():
    """10⁶-sample estimates at ρ = 0.5 land within four standard errors of the exact values."""
    cfg = EstimatorConfig(samples=1_000_000, seed=1729, shards=4, workers=2)
    evaluate = family_evaluator("majority", 3)

    accuracy = mc_accuracy(evaluate, 3, 0.5, cfg).accuracy
    welfare, welfare_halfwidth = mc_welfare(evaluate, 3, 0.5, cfg)
    influence = mc_probabilistic_influence(evaluate, 2, 3, 0.5, cfg).value

    assert abs(accuracy - 0.703125) <= 4 * _sigma(0.703125, cfg.samples)
    assert abs(welfare.value - 0.75) <= 4 * welfare_halfwidth / cfg.z
    assert abs(influence - 0.3125) <= 4 * _sigma(0.3125, cfg.samples)
