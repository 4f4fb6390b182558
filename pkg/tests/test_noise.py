"""
Tests for the noisy mechanism, the ε/ρ conversion and the noise operator.
"""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from noisy_choice.bf_core import BitVector, make_family, random_table
from noisy_choice.noise import (
    RhoParam,
    UnboundedPrivacyError,
    apply_kernel,
    apply_mechanism,
    epsilon_of_rho,
    flip_votes,
    noise_operator,
    noise_operator_direct,
    noise_operator_positive,
    privacy_ratio_bound,
    rho_of_epsilon,
    sample_correlated,
)


def test_epsilon_of_rho_known_values():
    assert epsilon_of_rho(0.5) == pytest.approx(math.log(3))
    assert epsilon_of_rho(0.9) == pytest.approx(math.log(19))
    assert epsilon_of_rho(0.0) == 0.0


def test_epsilon_of_rho_one_is_unbounded():
    with pytest.raises(UnboundedPrivacyError):
        epsilon_of_rho(1.0)


def test_rho_of_epsilon_inverts():
    assert rho_of_epsilon(math.log(3)).rho == pytest.approx(0.5)
    assert rho_of_epsilon(0.0).rho == 0.0
    assert rho_of_epsilon(math.inf).rho == 1.0


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=0.0, max_value=20.0))
def test_epsilon_round_trip(eps):
    """ε → ρ → ε is exact to 1e-12 on [0, 20]."""
    assert abs(epsilon_of_rho(rho_of_epsilon(eps)) - eps) <= 1e-12


def test_rho_of_epsilon_keeps_flip_probability_positive():
    """Large ε still yields a nonzero flip probability."""
    param = rho_of_epsilon(40.0)

    assert param.flip_prob > 0.0
    assert param.keep_prob / param.flip_prob == pytest.approx(math.exp(40.0))


def test_rho_of_epsilon_rejects_negative():
    with pytest.raises(ValueError):
        rho_of_epsilon(-1.0)


def test_rho_param_validation():
    with pytest.raises(ValueError) as exc_info:
        RhoParam(1.5)

    assert "[0, 1]" in str(exc_info.value)

    with pytest.raises(TypeError):
        RhoParam(True)


def test_privacy_ratio_bound():
    assert privacy_ratio_bound(0.5) == pytest.approx(3.0)
    assert privacy_ratio_bound(1.0) == math.inf


def test_noise_operator_majority_at_all_plus():
    """T_0.5 maj3 at (1,1,1) = 3·0.5·0.5 + 0.125·(-0.5)."""
    smoothed = noise_operator(make_family("majority", 3), 0.5)

    assert smoothed(BitVector.from_votes([1, 1, 1])) == pytest.approx(0.6875)


def test_noise_operator_endpoints():
    """ρ = 1 is the identity; ρ = 0 flattens f to its mean."""
    f = make_family("or", 3)

    assert_allclose(noise_operator(f, 1.0).values, f.signs())
    assert_allclose(noise_operator(f, 0.0).values, np.full(8, 0.75))


def test_noise_operator_paths_agree():
    rng = np.random.default_rng(7)
    for n in range(1, 7):
        f = random_table(n, rng)
        for rho in (0.0, 0.3, 0.8, 1.0):
            spectral = noise_operator(f, rho).values
            assert_allclose(noise_operator_direct(f, rho).values, spectral, atol=1e-12)
            assert_allclose(noise_operator_positive(f, rho).values, spectral, atol=1e-12)


def test_apply_kernel_with_fractions():
    """The kernel works on exact rationals."""
    indicator = np.array([Fraction(0), Fraction(1)], dtype=object)
    result = apply_kernel(indicator, 1, Fraction(3, 4), Fraction(1, 4))

    assert list(result) == [Fraction(1, 4), Fraction(3, 4)]


def test_sample_correlated_is_seeded():
    x = BitVector.from_votes([1, -1, 1, 1, -1, -1, 1, 1])

    assert sample_correlated(x, 0.2, 11) == sample_correlated(x, 0.2, 11)
    assert sample_correlated(x, 1.0, 11) == x


def test_apply_mechanism_releases_f_of_noised_profile():
    f = make_family("majority", 3)
    x = BitVector.from_votes([1, 1, -1])
    sample = apply_mechanism(f, x, 0.5, 3)

    assert sample.input == x
    assert sample.released == f(sample.output_vote)


def test_apply_mechanism_dimension_mismatch():
    with pytest.raises(ValueError) as exc_info:
        apply_mechanism(make_family("majority", 3), BitVector.from_votes([1, 1]), 0.5, 0)

    assert "Dimension mismatch" in str(exc_info.value)


def test_flip_votes_rate():
    """Each vote flips with probability (1-ρ)/2."""
    rng = np.random.default_rng(2024)
    votes = np.ones(200_000, dtype=np.int8)
    flipped = flip_votes(votes, RhoParam(0.5), rng)

    assert flipped.dtype == np.int8
    assert np.mean(flipped == -1) == pytest.approx(0.25, abs=0.005)


@pytest.mark.parametrize("rho, expected", [(0.0, 0.5), (0.6, 0.8)])
def test_sample_correlated_agreement_rate(rho, expected):
    """Each coordinate of y agrees with x with probability (1+ρ)/2."""
    n = 2_000_000
    bits = int.from_bytes(np.random.default_rng(5).bytes(n // 8), "little")
    x = BitVector(n=n, bits=bits)

    y = sample_correlated(x, rho, 99)

    agreement = 1.0 - (x.bits ^ y.bits).bit_count() / n
    assert agreement == pytest.approx(expected, abs=0.002)


def test_apply_mechanism_on_dictator_keeps_the_vote():
    """M_ρ dict_i releases x_i with probability (1+ρ)/2."""
    f = make_family("dictator", 3, i=2)
    x = BitVector.from_votes([1, -1, 1])
    draws = 20_000

    kept = sum(apply_mechanism(f, x, 0.6, seed).released == -1 for seed in range(draws))

    assert kept / draws == pytest.approx(0.8, abs=0.015)


def test_sampled_mechanism_mean_approaches_noise_operator():
    """The average of f(y) over y ~ N_ρ(x) converges to T_ρ f(x)."""
    f = make_family("majority", 3)
    x = BitVector.from_votes([1, 1, -1])
    draws = 20_000

    mean = sum(f(sample_correlated(x, 0.5, seed)) for seed in range(draws)) / draws

    assert noise_operator(f, 0.5)(x) == pytest.approx(0.3125)
    assert mean == pytest.approx(0.3125, abs=0.03)
