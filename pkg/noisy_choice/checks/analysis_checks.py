"""
Checks for the influence and welfare scaling laws.
"""

import logging
import math
from collections import defaultdict
from typing import Any

import numpy as np

from noisy_choice.analysis import (
    argmax_welfare,
    derivative_influence,
    influence,
    influence_profile,
    influence_via_fourier,
    mechanism_welfare,
    probabilistic_influence,
    probabilistic_influence_nested,
    ranks_agree,
    welfare,
    welfare_maximizers,
    welfare_via_fourier,
)
from noisy_choice.bf_core import is_monotone, vote_sums
from noisy_choice.checks.common import (
    DEFAULT_TOLERANCE,
    ResidualTracker,
    corpus_up_to,
    get_corpus,
    max_n,
    rho_grid,
)
from noisy_choice.config import register_check
from noisy_choice.suite import CheckResult

logger = logging.getLogger(__name__)


@register_check("influence_definitions_agree")
class InfluenceDefinitionsCheck:
    """
    The probability and derivative forms of influence agree; for monotone f
    both equal f̂({i}); at ρ = 1 probabilistic influence is plain influence.

    Context: Reads 'corpus'
    """

    def __init__(self, tolerance: float = DEFAULT_TOLERANCE):
        self.tolerance = tolerance

    def run(self, context: dict[str, Any]) -> CheckResult:
        tracker = ResidualTracker()
        for member in get_corpus(context):
            f = member.table
            monotone = is_monotone(f)
            for i in range(1, f.n + 1):
                base = influence(f, i)
                where = f"{member.name} i={i}"
                tracker.add(abs(base - derivative_influence(f, i)), where)
                tracker.add(abs(base - probabilistic_influence(f, i, 1.0)), where)
                if monotone:
                    tracker.add(abs(base - influence_via_fourier(f, i)), where)
        return tracker.result(self.check_name, self.tolerance)


@register_check("influence_scaling")
class InfluenceScalingCheck:
    """
    Probabilistic influence equals (1+ρ²)/2 times influence, for every voter.

    Context: Reads 'corpus' and 'rho_grid'
    """

    def __init__(self, tolerance: float = DEFAULT_TOLERANCE):
        self.tolerance = tolerance

    def run(self, context: dict[str, Any]) -> CheckResult:
        tracker = ResidualTracker()
        for member in get_corpus(context):
            f = member.table
            base = influence_profile(f).per_voter
            for rho in rho_grid(context):
                factor = (1.0 + rho * rho) / 2.0
                for i in range(1, f.n + 1):
                    got = probabilistic_influence(f, i, rho)
                    tracker.add(abs(got - factor * base[i - 1]), f"{member.name} i={i} rho={rho}")
        return tracker.result(self.check_name, self.tolerance)


@register_check("nested_influence_equivalence")
class NestedInfluenceCheck:
    """
    The two-stage noising definition of probabilistic influence matches the
    single-coordinate form.

    Context: Reads 'corpus' and 'rho_grid'
    """

    def __init__(self, largest_n: int = 8, tolerance: float = DEFAULT_TOLERANCE):
        self.largest_n = largest_n
        self.tolerance = tolerance

    def run(self, context: dict[str, Any]) -> CheckResult:
        tracker = ResidualTracker()
        for member in corpus_up_to(context, self.largest_n):
            f = member.table
            for rho in rho_grid(context):
                for i in range(1, f.n + 1):
                    nested = probabilistic_influence_nested(f, i, rho)
                    flat = probabilistic_influence(f, i, rho)
                    tracker.add(abs(nested - flat), f"{member.name} i={i} rho={rho}")
        return tracker.result(self.check_name, self.tolerance)


@register_check("welfare_fourier_identity")
class WelfareFourierCheck:
    """W(f) = Σ_i f̂({i}). Context: Reads 'corpus'"""

    def __init__(self, tolerance: float = DEFAULT_TOLERANCE):
        self.tolerance = tolerance

    def run(self, context: dict[str, Any]) -> CheckResult:
        tracker = ResidualTracker()
        for member in get_corpus(context):
            direct = welfare(member.table).value
            tracker.add(abs(direct - welfare_via_fourier(member.table).value), member.name)
        return tracker.result(self.check_name, self.tolerance)


@register_check("welfare_scaling")
class WelfareScalingCheck:
    """
    W(M_ρ f) = ρ · W(f), and the welfare ranking is unchanged by the mechanism
    for ρ > 0, both among same-size functions and across the whole corpus.

    Context: Reads 'corpus', 'rho_grid' and 'welfare_tamper'
    """

    def __init__(self, tolerance: float = DEFAULT_TOLERANCE):
        self.tolerance = tolerance

    def run(self, context: dict[str, Any]) -> CheckResult:
        tamper = float(context.get("welfare_tamper", 1.0))
        if tamper != 1.0:
            logger.warning(f"Mechanism welfare is multiplied by {tamper} for this run")
        tracker = ResidualTracker()
        before: dict[int, list[float]] = defaultdict(list)
        after: dict[tuple[int, float], list[float]] = defaultdict(list)
        corpus_before: list[float] = []
        corpus_after: dict[float, list[float]] = defaultdict(list)

        for member in get_corpus(context):
            f = member.table
            base = welfare(f).value
            before[f.n].append(base)
            corpus_before.append(base)
            for rho in rho_grid(context):
                noisy = mechanism_welfare(f, rho).value * tamper
                after[(f.n, rho)].append(noisy)
                corpus_after[rho].append(noisy)
                tracker.add(abs(noisy - rho * base), f"{member.name} rho={rho}")

        for (n, rho), values in after.items():
            if rho > 0 and not ranks_agree(before[n], values):
                tracker.fail(f"welfare order n={n} rho={rho}")
        for rho, values in corpus_after.items():
            if rho > 0 and not ranks_agree(corpus_before, values):
                tracker.fail(f"corpus welfare order rho={rho}")
        return tracker.result(self.check_name, self.tolerance)


@register_check("influence_ordinal_preservation")
class InfluenceOrdinalCheck:
    """
    Ranking voters by influence gives the same order with or without noise.

    Context: Reads 'corpus' and 'rho_grid'
    """

    def __init__(self, tolerance: float = DEFAULT_TOLERANCE):
        self.tolerance = tolerance

    def run(self, context: dict[str, Any]) -> CheckResult:
        tracker = ResidualTracker()
        for member in get_corpus(context):
            f = member.table
            if f.n < 2:
                continue
            base = influence_profile(f).per_voter
            for rho in rho_grid(context):
                noisy = [probabilistic_influence(f, i, rho) for i in range(1, f.n + 1)]
                tracker.add(0.0, f"{member.name} rho={rho}")
                if not ranks_agree(base, noisy):
                    tracker.fail(f"{member.name} rho={rho}")
        return tracker.result(self.check_name, self.tolerance)


@register_check("monotone_welfare_equals_total_influence")
class MonotoneWelfareCheck:
    """
    For monotone f, W(f) = I[f] and W(M_ρ f) = ρ · I[f].

    Context: Reads 'corpus' and 'rho_grid'
    """

    def __init__(self, tolerance: float = DEFAULT_TOLERANCE):
        self.tolerance = tolerance

    def run(self, context: dict[str, Any]) -> CheckResult:
        tracker = ResidualTracker()
        monotone = [member for member in get_corpus(context) if is_monotone(member.table)]
        for member in monotone:
            total = influence_profile(member.table).total
            tracker.add(abs(welfare(member.table).value - total), member.name)
            for rho in rho_grid(context):
                noisy = mechanism_welfare(member.table, rho).value
                tracker.add(abs(noisy - rho * total), f"{member.name} rho={rho}")
        return tracker.result(self.check_name, self.tolerance, extra=[f"{len(monotone)} monotone functions"])


@register_check("majority_unique_welfare_maximizer")
class WelfareMaximizerCheck:
    """
    Exhaustive search: majority is the unique welfare maximizer for odd n, and
    for even n every maximizer follows the majority off the ties.

    Context: Reads 'max_n'
    """

    def __init__(self, largest_n: int = 4, tolerance: float = DEFAULT_TOLERANCE):
        self.largest_n = largest_n
        self.tolerance = tolerance

    def run(self, context: dict[str, Any]) -> CheckResult:
        tracker = ResidualTracker()
        top = max(1, min(self.largest_n, max_n(context)))
        for n in range(1, top + 1):
            best_possible = float(np.mean(np.abs(vote_sums(n))))
            if n % 2 == 1:
                winner = argmax_welfare(n)
                tracker.add(abs(welfare(winner).value - best_possible), f"n={n}")
                continue
            maximizers = welfare_maximizers(n)
            expected = 1 << math.comb(n, n // 2)
            if len(maximizers) != expected:
                tracker.fail(f"n={n}: {len(maximizers)} maximizers, expected {expected}")
            decided = vote_sums(n) != 0
            majority_signs = np.sign(vote_sums(n))
            for table in maximizers:
                if not np.array_equal(table.signs()[decided], majority_signs[decided]):
                    tracker.fail(f"n={n}: maximizer disagrees with majority")
                    break
                tracker.add(abs(welfare(table).value - best_possible), f"n={n}")
        return tracker.result(self.check_name, self.tolerance)


__all__ = [
    "InfluenceDefinitionsCheck",
    "InfluenceScalingCheck",
    "NestedInfluenceCheck",
    "WelfareFourierCheck",
    "WelfareScalingCheck",
    "InfluenceOrdinalCheck",
    "MonotoneWelfareCheck",
    "WelfareMaximizerCheck",
]

