"""
Checks for the privacy audit.
"""

import logging
import math
from typing import Any

from noisy_choice.bf_core import BitVector, make_family
from noisy_choice.checks.common import (
    DEFAULT_TOLERANCE,
    OPEN_RHO_GRID,
    ResidualTracker,
    corpus_up_to,
    max_n,
)
from noisy_choice.config import register_check
from noisy_choice.noise import epsilon_of_rho
from noisy_choice.privacy_audit import (
    EXACT_MAX_N,
    audit,
    output_distribution,
    tightness_condition,
)
from noisy_choice.suite import CheckResult

logger = logging.getLogger(__name__)

SYMMETRIC_KINDS = ("majority", "and", "or")


@register_check("privacy_bound")
class PrivacyBoundCheck:
    """
    Worst neighboring log-ratio never exceeds ln((1+ρ)/(1-ρ)).

    Context: Reads 'corpus'
    """

    def __init__(self, largest_n: int = 12, tolerance: float = DEFAULT_TOLERANCE):
        self.largest_n = largest_n
        self.tolerance = tolerance

    def run(self, context: dict[str, Any]) -> CheckResult:
        tracker = ResidualTracker()
        for member in corpus_up_to(context, self.largest_n):
            for rho in OPEN_RHO_GRID:
                report = audit(member.table, rho)
                tracker.add(max(0.0, report.max_log_ratio - report.epsilon_bound), f"{member.name} rho={rho}")
        return tracker.result(self.check_name, self.tolerance)


@register_check("dictator_tightness")
class DictatorTightnessCheck:
    """
    Dictators attain the bound exactly; constants attain 0; majority on three
    voters stays strictly below.

    Context: Reads 'max_n'
    """

    def __init__(self, tolerance: float = DEFAULT_TOLERANCE):
        self.tolerance = tolerance

    def run(self, context: dict[str, Any]) -> CheckResult:
        tracker = ResidualTracker()
        for n in range(1, min(max_n(context), 10) + 1):
            for i in sorted({1, n}):
                table = make_family("dictator", n, i=i)
                for rho in OPEN_RHO_GRID:
                    report = audit(table, rho)
                    where = f"dictator{i}_{n} rho={rho}"
                    tracker.add(abs(report.max_log_ratio - epsilon_of_rho(rho)), where)
                    if not report.tight:
                        tracker.fail(where)
                if n <= min(4, EXACT_MAX_N) and not audit(table, 0.5, exact=True).tight:
                    tracker.fail(f"dictator{i}_{n} exact")

        for value in (-1, 1):
            report = audit(make_family("constant", 3, value=value), 0.5)
            tracker.add(abs(report.max_log_ratio), f"constant{value:+d}_3")

        majority = audit(make_family("majority", 3), 0.5)
        if majority.tight or majority.max_log_ratio >= math.log(3.0):
            tracker.fail("majority_3 reached the bound")
        return tracker.result(self.check_name, self.tolerance)


@register_check("tightness_condition_equivalence")
class TightnessEquivalenceCheck:
    """
    The audit reports a tight bound exactly when some level set lies inside a
    coordinate half-cube.

    Context: Reads 'corpus'
    """

    def __init__(self, rho: float = 0.5, largest_n: int = 10):
        self.rho = rho
        self.largest_n = largest_n
        self.tolerance = 0.0

    def run(self, context: dict[str, Any]) -> CheckResult:
        tracker = ResidualTracker()
        tight_count = 0
        for member in corpus_up_to(context, self.largest_n):
            condition = tightness_condition(member.table)
            tight = audit(member.table, self.rho).tight
            tight_count += int(tight)
            tracker.add(0.0 if condition == tight else 1.0, member.name)
        return tracker.result(self.check_name, self.tolerance, extra=[f"{tight_count} tight functions"])


@register_check("output_distribution_normalization")
class OutputDistributionCheck:
    """
    Output distributions sum to 1 and, for symmetric functions, do not depend
    on the order of the voters.

    Context: Reads 'corpus'
    """

    def __init__(self, largest_n: int = 8, tolerance: float = DEFAULT_TOLERANCE):
        self.largest_n = largest_n
        self.tolerance = tolerance

    def run(self, context: dict[str, Any]) -> CheckResult:
        tracker = ResidualTracker()
        for member in corpus_up_to(context, self.largest_n):
            f = member.table
            for bits in range(1 << f.n):
                x = BitVector(f.n, bits)
                distribution = output_distribution(f, x, 0.5)
                tracker.add(abs(sum(distribution.values()) - 1.0), f"{member.name} x={bits}")

        for kind in SYMMETRIC_KINDS:
            for n in range(3, min(max_n(context), self.largest_n) + 1, 2):
                f = make_family(kind, n)
                for bits in range(1 << n):
                    x = BitVector(f.n, bits)
                    # Cyclic shift of the voters
                    shifted = BitVector.from_votes(x.votes()[1:] + x.votes()[:1])
                    a = output_distribution(f, x, 0.3)
                    b = output_distribution(f, shifted, 0.3)
                    if a.keys() != b.keys():
                        tracker.fail(f"{kind}_{n} x={bits}")
                        continue
                    for r in a:
                        tracker.add(abs(a[r] - b[r]), f"{kind}_{n} x={bits}")
        return tracker.result(self.check_name, self.tolerance)


__all__ = [
    "PrivacyBoundCheck",
    "DictatorTightnessCheck",
    "TightnessEquivalenceCheck",
    "OutputDistributionCheck",
]
