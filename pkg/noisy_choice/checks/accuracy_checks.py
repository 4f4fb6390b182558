"""
Checks for noise stability, the accuracy engines and the majority bounds.
"""

import logging
from typing import Any

import numpy as np

from noisy_choice.accuracy import (
    CLOSED_FORM_KINDS,
    DpMemoTable,
    HashDpMemoTable,
    accuracy_closed_form,
    accuracy_dp,
    accuracy_exact,
    accuracy_via_level_sets,
    asymptotic_majority_accuracy,
    stability,
    stability_spectral,
)
from noisy_choice.bf_core import make_family
from noisy_choice.checks.common import (
    DEFAULT_TOLERANCE,
    OPEN_RHO_GRID,
    ResidualTracker,
    get_corpus,
    max_n,
    rho_grid,
)
from noisy_choice.config import register_check
from noisy_choice.noise import noise_operator_direct
from noisy_choice.suite import CheckResult

logger = logging.getLogger(__name__)

DIRECT_ACCURACY_MAX_N = 8
GAP_DECAY_NS = (13, 25, 51, 101, 201, 401, 801)


def _odd_ns(largest: int) -> list[int]:
    return list(range(1, largest + 1, 2))


@register_check("stability_identity")
class StabilityIdentityCheck:
    """
    E[f · T_ρ f] matches Σ ρ^|S| f̂(S)², and accuracy counted directly as
    P[M_ρ f(x) = f(x)] matches (1 + Stab_ρ f) / 2 for small n.

    Context: Reads 'corpus' and 'rho_grid'
    """

    def __init__(self, direct_max_n: int = DIRECT_ACCURACY_MAX_N, tolerance: float = DEFAULT_TOLERANCE):
        self.direct_max_n = direct_max_n
        self.tolerance = tolerance

    def run(self, context: dict[str, Any]) -> CheckResult:
        tracker = ResidualTracker()
        for member in get_corpus(context):
            f = member.table
            for rho in rho_grid(context):
                where = f"{member.name} rho={rho}"
                stab = stability(f, rho)
                tracker.add(abs(stab - stability_spectral(f, rho)), where)
                if f.n <= self.direct_max_n:
                    smoothed = noise_operator_direct(f, rho).values
                    # P[f(y) = f(x)] = (1 + f(x)·E[f(y)]) / 2 pointwise
                    direct = float(np.mean((1.0 + f.signs() * smoothed) / 2.0))
                    tracker.add(abs(direct - accuracy_exact(f, rho).accuracy), where)
        return tracker.result(self.check_name, self.tolerance)


@register_check("closed_form_agreement")
class ClosedFormAgreementCheck:
    """
    Closed forms for dictator, AND and OR match the exact engine.

    Context: Reads 'max_n' and 'rho_grid'
    """

    def __init__(self, largest_n: int = 12, tolerance: float = DEFAULT_TOLERANCE):
        self.largest_n = largest_n
        self.tolerance = tolerance

    def run(self, context: dict[str, Any]) -> CheckResult:
        tracker = ResidualTracker()
        for n in range(1, min(self.largest_n, max_n(context)) + 1):
            for kind in CLOSED_FORM_KINDS:
                table = make_family(kind, n, i=1) if kind == "dictator" else make_family(kind, n)
                for rho in rho_grid(context):
                    closed = accuracy_closed_form(kind, n, rho).accuracy
                    tracker.add(abs(closed - accuracy_exact(table, rho).accuracy), f"{kind}_{n} rho={rho}")
        return tracker.result(self.check_name, self.tolerance)


@register_check("level_set_agreement")
class LevelSetAgreementCheck:
    """
    Accuracy from 1 - 2P[f=1] + 2P[M_ρ f = 1, f = 1] matches the spectral engine.

    Context: Reads 'corpus' and 'rho_grid'
    """

    def __init__(self, tolerance: float = DEFAULT_TOLERANCE):
        self.tolerance = tolerance

    def run(self, context: dict[str, Any]) -> CheckResult:
        tracker = ResidualTracker()
        for member in get_corpus(context):
            for rho in rho_grid(context):
                level = accuracy_via_level_sets(member.table, rho).accuracy
                exact = accuracy_exact(member.table, rho).accuracy
                tracker.add(abs(level - exact), f"{member.name} rho={rho}")
        return tracker.result(self.check_name, self.tolerance)


@register_check("dp_agreement")
class DpAgreementCheck:
    """
    The dynamic program matches the exact engine on majority and on small
    thresholds; both memo layouts agree; a repeated query expands nothing.

    Context: Reads 'max_n' and 'rho_grid'
    """

    def __init__(self, majority_max_n: int = 13, thetas: tuple = (-2, -1, 0, 1, 2),
                 tolerance: float = DEFAULT_TOLERANCE):
        self.majority_max_n = majority_max_n
        self.thetas = tuple(thetas)
        self.tolerance = tolerance

    def run(self, context: dict[str, Any]) -> CheckResult:
        tracker = ResidualTracker()
        threshold_max_n = min(max_n(context), 10)
        for rho in rho_grid(context):
            memo = DpMemoTable(rho)
            for n in _odd_ns(self.majority_max_n):
                dp = accuracy_dp(0, n, rho, memo).accuracy
                exact = accuracy_exact(make_family("majority", n), rho).accuracy
                tracker.add(abs(dp - exact), f"majority_{n} rho={rho}")

            for theta in self.thetas:
                for n in range(max(1, abs(theta)), threshold_max_n + 1):
                    dp = accuracy_dp(theta, n, rho, memo).accuracy
                    exact = accuracy_exact(make_family("threshold", n, theta=theta), rho).accuracy
                    tracker.add(abs(dp - exact), f"threshold{theta}_{n} rho={rho}")

            hashed = accuracy_dp(0, self.majority_max_n, rho, HashDpMemoTable(rho)).accuracy
            dense = accuracy_dp(0, self.majority_max_n, rho, memo).accuracy
            tracker.add(abs(hashed - dense), f"memo layouts rho={rho}")

            expansions = memo.expansions
            accuracy_dp(0, self.majority_max_n, rho, memo)
            if memo.expansions != expansions:
                tracker.fail(f"repeat query expanded {memo.expansions - expansions} states at rho={rho}")
        return tracker.result(self.check_name, self.tolerance)


@register_check("majority_monotonicity")
class MajorityMonotonicityCheck:
    """
    Stab_ρ[Maj_n] strictly decreases over odd n for ρ in (0, 1).

    Context: None
    """

    def __init__(self, largest_n: int = 13):
        self.largest_n = largest_n
        self.tolerance = 0.0

    def run(self, context: dict[str, Any]) -> CheckResult:
        tracker = ResidualTracker()
        tables = [make_family("majority", n) for n in _odd_ns(self.largest_n)]
        for rho in OPEN_RHO_GRID:
            values = np.array([stability(table, rho) for table in tables])
            steps = np.diff(values)
            worst = int(np.argmax(steps))
            # A non-negative step breaks strict decrease
            tracker.add(max(0.0, float(steps[worst])), f"rho={rho} n={2 * worst + 1}->{2 * worst + 3}")
            if steps[worst] >= 0:
                tracker.fail(f"rho={rho}")
        return tracker.result(self.check_name, self.tolerance)


@register_check("majority_lower_bound")
class MajorityLowerBoundCheck:
    """
    1/2 + arcsin(ρ)/π never exceeds the exact majority accuracy.

    Context: None
    """

    def __init__(self, exact_max_n: int = 13, dp_ns: tuple = (25, 51, 101), tolerance: float = DEFAULT_TOLERANCE):
        self.exact_max_n = exact_max_n
        self.dp_ns = tuple(dp_ns)
        self.tolerance = tolerance

    def run(self, context: dict[str, Any]) -> CheckResult:
        tracker = ResidualTracker()
        for rho in OPEN_RHO_GRID:
            lower = asymptotic_majority_accuracy(rho)
            memo = DpMemoTable(rho)
            for n in _odd_ns(self.exact_max_n):
                acc = accuracy_exact(make_family("majority", n), rho).accuracy
                tracker.add(max(0.0, lower - acc), f"majority_{n} rho={rho}")
            for n in self.dp_ns:
                acc = accuracy_dp(0, n, rho, memo).accuracy
                tracker.add(max(0.0, lower - acc), f"majority_{n} rho={rho}")
        return tracker.result(self.check_name, self.tolerance)


@register_check("majority_gap_decay")
class MajorityGapDecayCheck:
    """
    The gap between majority accuracy and its limit shrinks at least as fast
    as the n^(-1/2) term of the upper bound.

    Fits log(gap) against log(n) over DP results and requires the slope to be
    at most max_slope. The exact gap decays close to 1/n, so the fitted slope
    sits near -1.

    Context: None
    """

    def __init__(self, rho: float = 0.5, ns: tuple = GAP_DECAY_NS, max_slope: float = -0.35):
        self.rho = rho
        self.ns = tuple(ns)
        self.max_slope = max_slope
        self.tolerance = 0.0

    def run(self, context: dict[str, Any]) -> CheckResult:
        tracker = ResidualTracker()
        memo = DpMemoTable(self.rho)
        lower = asymptotic_majority_accuracy(self.rho)
        gaps = []
        for n in self.ns:
            gap = accuracy_dp(0, n, self.rho, memo).accuracy - lower
            logger.debug(f"Majority gap at n={n}, rho={self.rho}: {gap}")
            if gap <= 0:
                tracker.fail(f"non-positive gap at n={n}")
                gap = float("nan")
            gaps.append(gap)

        if tracker.failures:
            return tracker.result(self.check_name, self.tolerance)
        slope = float(np.polyfit(np.log(self.ns), np.log(gaps), 1)[0])
        tracker.add(max(0.0, slope - self.max_slope), f"rho={self.rho}")
        if slope > self.max_slope:
            tracker.fail(f"slope {slope:.3f} above {self.max_slope}")
        return tracker.result(self.check_name, self.tolerance, extra=[f"fitted slope {slope:.3f}"])


__all__ = [
    "StabilityIdentityCheck",
    "ClosedFormAgreementCheck",
    "LevelSetAgreementCheck",
    "DpAgreementCheck",
    "MajorityMonotonicityCheck",
    "MajorityLowerBoundCheck",
    "MajorityGapDecayCheck",
]
