"""
Tests for influence and welfare, with and without the mechanism.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noisy_choice.analysis import (
    NotMonotoneError,
    WelfareValue,
    argmax_welfare,
    derivative_influence,
    enumerate_welfare,
    influence,
    influence_profile,
    influence_via_fourier,
    mechanism_welfare,
    probabilistic_influence,
    probabilistic_influence_nested,
    ranks_agree,
    tolerant_ranks,
    total_probabilistic_influence,
    welfare,
    welfare_maximizers,
    welfare_via_fourier,
)
from noisy_choice.bf_core import TruthTable, make_family
from noisy_choice.config import CapExceededError

rhos = st.sampled_from([0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0])


@st.composite
def tables(draw, max_n: int = 5):
    n = draw(st.integers(min_value=1, max_value=max_n))
    signs = draw(st.lists(st.sampled_from([-1, 1]), min_size=1 << n, max_size=1 << n))
    return TruthTable.from_signs(np.array(signs, dtype=np.int8))


def test_majority_three_influences():
    profile = influence_profile(make_family("majority", 3))

    assert profile.per_voter == (0.5, 0.5, 0.5)
    assert profile.total == pytest.approx(1.5)


def test_dictator_influence():
    f = make_family("dictator", 4, i=3)

    assert influence(f, 3) == 1.0
    assert influence(f, 1) == 0.0


def test_influence_rejects_bad_voter():
    with pytest.raises(ValueError) as exc_info:
        influence(make_family("majority", 3), 4)

    assert "out of range" in str(exc_info.value)


def test_influence_via_fourier_requires_monotone():
    with pytest.raises(NotMonotoneError):
        influence_via_fourier(make_family("parity", 3), 1)


def test_probabilistic_influence_majority():
    """(1 + 0.25)/2 · 0.5 for maj3 at ρ = 0.5."""
    f = make_family("majority", 3)

    assert probabilistic_influence(f, 2, 0.5) == pytest.approx(0.3125)
    assert total_probabilistic_influence(f, 0.5) == pytest.approx(0.9375)


@settings(max_examples=40, deadline=None)
@given(tables(), rhos)
def test_influence_scaling_law(f, rho):
    """I_i[M_ρ f] = (1+ρ²)/2 · I_i[f] for every voter."""
    for i in range(1, f.n + 1):
        expected = (1 + rho * rho) / 2 * influence(f, i)
        assert probabilistic_influence(f, i, rho) == pytest.approx(expected, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(tables(), rhos)
def test_nested_definition_matches(f, rho):
    for i in range(1, f.n + 1):
        nested = probabilistic_influence_nested(f, i, rho)
        assert nested == pytest.approx(probabilistic_influence(f, i, rho), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(tables())
def test_influence_definitions_agree(f):
    for i in range(1, f.n + 1):
        assert derivative_influence(f, i) == pytest.approx(influence(f, i), abs=1e-12)


def test_majority_three_welfare():
    f = make_family("majority", 3)

    assert welfare(f).value == pytest.approx(1.5)
    assert welfare_via_fourier(f).value == pytest.approx(1.5)
    noisy = mechanism_welfare(f, 0.5)
    assert noisy.value == pytest.approx(0.75)
    assert noisy.basis == "mechanism"
    assert noisy.rho == 0.5


@settings(max_examples=40, deadline=None)
@given(tables(), rhos)
def test_welfare_scaling_law(f, rho):
    """W(M_ρ f) = ρ · W(f)."""
    assert mechanism_welfare(f, rho).value == pytest.approx(rho * welfare(f).value, abs=1e-9)


def test_monotone_welfare_is_total_influence():
    for f in (make_family("majority", 5), make_family("and", 3), make_family("threshold", 4, theta=-1)):
        assert welfare(f).value == pytest.approx(influence_profile(f).total)


def test_welfare_value_basis_is_checked():
    with pytest.raises(ValueError):
        WelfareValue(value=1.0, basis="noisy")


def test_argmax_welfare_small_n():
    """Majority is the unique maximizer for n = 1 and n = 3."""
    assert argmax_welfare(1) == make_family("dictator", 1, i=1)
    assert argmax_welfare(3) == make_family("majority", 3)


def test_enumerate_welfare_three_voters():
    welfares = enumerate_welfare(3)

    assert welfares.shape == (256,)
    assert welfares.max() == pytest.approx(1.5)
    assert np.count_nonzero(welfares >= 1.5 - 1e-9) == 1


def test_even_n_has_tied_maximizers():
    """For n = 2 the two tie profiles can be decided either way."""
    maximizers = welfare_maximizers(2)

    assert len(maximizers) == 4
    for f in maximizers:
        assert f(0) == -1
        assert f(3) == 1


def test_argmax_welfare_rejects_even_and_large_n():
    with pytest.raises(ValueError) as exc_info:
        argmax_welfare(2)

    assert "odd" in str(exc_info.value)

    with pytest.raises(CapExceededError) as exc_info:
        argmax_welfare(5)

    assert exc_info.value.cap_name == "welfare_search"


def test_tolerant_ranks_merge_near_ties():
    ranks = tolerant_ranks([0.3, 0.1, 0.3 + 1e-12, 0.2])

    assert list(ranks) == [2, 0, 2, 1]


def test_ranks_agree():
    assert ranks_agree([0.5, 0.5, 1.0], [0.25, 0.25, 0.5])
    assert not ranks_agree([0.5, 0.6], [0.6, 0.5])

    with pytest.raises(ValueError):
        ranks_agree([1.0], [1.0, 2.0])
