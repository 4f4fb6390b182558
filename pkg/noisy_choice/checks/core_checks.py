"""
Checks for Boolean-function basics and the noise operator.
"""

import logging
from typing import Any

import numpy as np

from noisy_choice.bf_core import character, inner_product, inverse_wht, make_family, wht
from noisy_choice.checks.common import (
    DEFAULT_TOLERANCE,
    ResidualTracker,
    corpus_up_to,
    get_corpus,
    max_n,
    rho_grid,
)
from noisy_choice.config import register_check
from noisy_choice.noise import (
    DIRECT_MAX_N,
    epsilon_of_rho,
    noise_operator,
    noise_operator_direct,
    rho_of_epsilon,
)
from noisy_choice.suite import CheckResult

logger = logging.getLogger(__name__)


@register_check("parseval")
class ParsevalCheck:
    """
    Σ_S f̂(S)² = 1 for every corpus member.

    Context: Reads 'corpus'
    """

    def __init__(self, tolerance: float = DEFAULT_TOLERANCE):
        self.tolerance = tolerance

    def run(self, context: dict[str, Any]) -> CheckResult:
        tracker = ResidualTracker()
        for member in get_corpus(context):
            tracker.add(abs(wht(member.table).parseval() - 1.0), member.name)
        return tracker.result(self.check_name, self.tolerance)


@register_check("wht_round_trip")
class WhtRoundTripCheck:
    """
    Inverse transform reproduces every table, and its signs exactly.

    Context: Reads 'corpus'
    """

    def __init__(self, tolerance: float = DEFAULT_TOLERANCE):
        self.tolerance = tolerance

    def run(self, context: dict[str, Any]) -> CheckResult:
        tracker = ResidualTracker()
        for member in get_corpus(context):
            signs = member.table.signs()
            rebuilt = inverse_wht(wht(member.table)).values
            tracker.add(float(np.max(np.abs(rebuilt - signs))), member.name)
            if not np.array_equal(np.where(rebuilt > 0, 1, -1), signs):
                tracker.fail(member.name)
        return tracker.result(self.check_name, self.tolerance)


@register_check("majority_threshold_agreement")
class MajorityThresholdCheck:
    """
    Majority equals the threshold-0 function for odd n up to 13.

    Context: None
    """

    def __init__(self, largest_n: int = 13):
        self.largest_n = largest_n
        self.tolerance = 0.0

    def run(self, context: dict[str, Any]) -> CheckResult:
        tracker = ResidualTracker()
        for n in range(1, self.largest_n + 1, 2):
            same = make_family("majority", n) == make_family("threshold", n, theta=0)
            tracker.add(0.0 if same else 1.0, f"n={n}")
        return tracker.result(self.check_name, self.tolerance)


@register_check("character_orthonormality")
class CharacterOrthonormalityCheck:
    """
    ⟨χ_S, χ_T⟩ is 1 when S = T and 0 otherwise, on seeded random subset pairs.

    Context: Reads 'max_n' and 'corpus_seed'
    """

    def __init__(self, pairs: int = 200, tolerance: float = DEFAULT_TOLERANCE):
        self.pairs = pairs
        self.tolerance = tolerance

    def run(self, context: dict[str, Any]) -> CheckResult:
        rng = np.random.default_rng(context.get("corpus_seed", 0))
        tracker = ResidualTracker()
        largest = min(max_n(context), 10)
        for _ in range(self.pairs):
            n = int(rng.integers(1, largest + 1))
            s = int(rng.integers(0, 1 << n))
            # Every fourth pair compares a subset with itself
            t = s if rng.random() < 0.25 else int(rng.integers(0, 1 << n))
            expected = 1.0 if s == t else 0.0
            value = inner_product(character(s, n), character(t, n))
            tracker.add(abs(value - expected), f"n={n} S={s} T={t}")
        return tracker.result(self.check_name, self.tolerance)


@register_check("noise_operator_agreement")
class NoiseOperatorAgreementCheck:
    """
    Spectral T_ρ f matches the direct sum Σ_y P[y|x] f(y).

    Context: Reads 'corpus'
    """

    def __init__(self, rhos: tuple = (0.0, 0.25, 0.5, 0.75, 1.0), tolerance: float = DEFAULT_TOLERANCE):
        self.rhos = tuple(rhos)
        self.tolerance = tolerance

    def run(self, context: dict[str, Any]) -> CheckResult:
        tracker = ResidualTracker()
        for member in corpus_up_to(context, min(10, DIRECT_MAX_N)):
            for rho in self.rhos:
                spectral = noise_operator(member.table, rho).values
                direct = noise_operator_direct(member.table, rho).values
                tracker.add(float(np.max(np.abs(spectral - direct))), f"{member.name} rho={rho}")
        return tracker.result(self.check_name, self.tolerance)


@register_check("noise_semigroup")
class NoiseSemigroupCheck:
    """
    T_ρ(T_σ f) = T_{ρσ} f.

    Context: Reads 'corpus'
    """

    def __init__(self, pairs: tuple = ((0.5, 0.5), (0.9, 0.3), (0.25, 1.0), (0.0, 0.7)),
                 tolerance: float = DEFAULT_TOLERANCE):
        self.pairs = tuple(tuple(p) for p in pairs)
        self.tolerance = tolerance

    def run(self, context: dict[str, Any]) -> CheckResult:
        tracker = ResidualTracker()
        for member in get_corpus(context):
            for rho, sigma in self.pairs:
                composed = noise_operator(noise_operator(member.table, sigma), rho).values
                single = noise_operator(member.table, rho * sigma).values
                tracker.add(float(np.max(np.abs(composed - single))), f"{member.name} ({rho}, {sigma})")
        return tracker.result(self.check_name, self.tolerance)


@register_check("epsilon_round_trip")
class EpsilonRoundTripCheck:
    """
    ε → ρ → ε is exact to 1e-12 on [0, 20]; ρ → ε → ρ likewise on [0, 1).

    Context: None
    """

    def __init__(self, points: int = 201, tolerance: float = 1e-12):
        self.points = points
        self.tolerance = tolerance

    def run(self, context: dict[str, Any]) -> CheckResult:
        tracker = ResidualTracker()
        for eps in np.linspace(0.0, 20.0, self.points):
            back = epsilon_of_rho(rho_of_epsilon(float(eps)))
            tracker.add(abs(back - eps), f"eps={eps:.3f}")
        for rho in np.linspace(0.0, 0.99, 100):
            back = rho_of_epsilon(epsilon_of_rho(float(rho))).rho
            tracker.add(abs(back - rho), f"rho={rho:.3f}")
        return tracker.result(self.check_name, self.tolerance)


@register_check("mechanism_switching")
class MechanismSwitchingCheck:
    """
    P_{x,M}[M_ρ f(x) = 1] = P_x[f(x) = 1]: noise on a uniform profile leaves it uniform.

    Context: Reads 'corpus' and 'rho_grid'
    """

    def __init__(self, tolerance: float = DEFAULT_TOLERANCE):
        self.tolerance = tolerance

    def run(self, context: dict[str, Any]) -> CheckResult:
        tracker = ResidualTracker()
        for member in get_corpus(context):
            p_f = member.table.positives() / member.table.size
            for rho in rho_grid(context):
                p_mech = (1.0 + float(np.mean(noise_operator(member.table, rho).values))) / 2.0
                tracker.add(abs(p_mech - p_f), f"{member.name} rho={rho}")
        return tracker.result(self.check_name, self.tolerance)


__all__ = [
    "ParsevalCheck",
    "WhtRoundTripCheck",
    "MajorityThresholdCheck",
    "CharacterOrthonormalityCheck",
    "NoiseOperatorAgreementCheck",
    "NoiseSemigroupCheck",
    "EpsilonRoundTripCheck",
    "MechanismSwitchingCheck",
]

