"""
Verification suite runner for noisy_choice.

This module defines the Check protocol and the VerificationSuite class. A check
is a self-contained numerical verification of one identity or bound about
the noisy mechanism; a suite runs an ordered list of checks against a shared
context (corpus, ρ grid, debug switches) and collects one result per check.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Optional, Protocol

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    """Outcome of a single check."""
    name: str
    passed: bool
    worst_residual: float
    tolerance: float
    detail: str = ""

    def to_dict(self) -> dict[str, Any]:
        record = asdict(self)
        # JSON has no infinity; failed-by-exception results carry inf
        if not math.isfinite(self.worst_residual):
            record["worst_residual"] = None
        return record


class Check(Protocol):
    """
    Protocol defining the interface for verification checks.

    Every check implements `run`, which reads the shared context (corpus,
    ρ grid, max_n, debug switches) and returns a CheckResult. Checks must not
    mutate entries they did not create.
    """

    check_name: str

    def run(self, context: dict[str, Any]) -> CheckResult:
        """
        Execute this check.

        Args:
            context: Shared dictionary built by the suite caller

        Returns:
            The result with its worst residual and tolerance
        """
        ...


@dataclass
class SuiteSummary:
    """Aggregated results of a suite run."""
    name: str
    results: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> list[CheckResult]:
        return [r for r in self.results if not r.passed]

    @property
    def max_residual(self) -> float:
        finite = [r.worst_residual for r in self.results if math.isfinite(r.worst_residual)]
        return max(finite, default=0.0)

    def to_dict(self) -> dict[str, Any]:
        return {
            "suite": self.name,
            "passed": self.passed,
            "max_residual": self.max_residual,
            "checks": [r.to_dict() for r in self.results],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


class VerificationSuite:
    """
    Runs an ordered sequence of checks.

    Unlike a processing pipeline, a failing or raising check does not stop
    the run: its exception is logged and recorded as a failed result so the
    summary always covers every check.
    """

    def __init__(self, checks: list[Check], name: Optional[str] = None):
        """
        Initialize a suite with an ordered list of checks.

        Args:
            checks: Ordered list of Check instances to execute
            name: Optional name for the suite (used in logging and the summary)
        """
        self.checks = checks
        self.name = name or "unnamed_suite"

    def run(self, context: Optional[dict[str, Any]] = None) -> SuiteSummary:
        """
        Execute all checks in order.

        Args:
            context: Shared context dictionary (initialized as empty dict if None)

        Returns:
            SuiteSummary with one CheckResult per check
        """
        if context is None:
            context = {}

        total = len(self.checks)
        logger.info(f"Suite '{self.name}' starting with {total} checks")
        summary = SuiteSummary(name=self.name)

        for i, check in enumerate(self.checks):
            check_name = getattr(check, "check_name", check.__class__.__name__)
            logger.info(f"Check {i + 1}/{total}: {check_name} starting")
            try:
                result = check.run(context)
            except Exception as e:
                logger.error(
                    f"Suite '{self.name}' check {i + 1}/{total} ({check_name}) raised: {e}",
                    exc_info=True
                )
                result = CheckResult(
                    name=check_name,
                    passed=False,
                    worst_residual=math.inf,
                    tolerance=getattr(check, "tolerance", 0.0),
                    detail=f"raised {type(e).__name__}: {e}",
                )

            status = "passed" if result.passed else "FAILED"
            logger.info(
                f"Check {i + 1}/{total}: {check_name} {status} "
                f"(worst residual {result.worst_residual:.3g}, tolerance {result.tolerance:.3g})"
            )
            summary.results.append(result)

        if summary.passed:
            logger.info(f"Suite '{self.name}' completed: all {total} checks passed")
        else:
            logger.info(
                f"Suite '{self.name}' completed: {len(summary.failures)} of {total} checks failed"
            )
        return summary
