"""
Shared context handling for verification checks.
"""

import logging
from typing import Any, Iterable, Optional

from noisy_choice.config import DEFAULT_SEED
from noisy_choice.corpus import NamedFunction, build_corpus
from noisy_choice.suite import CheckResult

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-9
DEFAULT_MAX_N = 10
RHO_GRID = [k / 10 for k in range(11)]
OPEN_RHO_GRID = [k / 10 for k in range(1, 10)]


def build_context(
    max_n: int = DEFAULT_MAX_N,
    corpus_seed: int = DEFAULT_SEED,
    welfare_tamper: float = 1.0,
) -> dict[str, Any]:
    """Context dictionary consumed by every check."""
    return {
        "max_n": max_n,
        "corpus_seed": corpus_seed,
        "rho_grid": list(RHO_GRID),
        "welfare_tamper": welfare_tamper,
    }


def get_corpus(context: dict[str, Any]) -> list[NamedFunction]:
    """The verification corpus, built once per context and cached under 'corpus'."""
    if "corpus" not in context:
        context["corpus"] = build_corpus(
            max_n=context.get("max_n", DEFAULT_MAX_N),
            seed=context.get("corpus_seed", DEFAULT_SEED),
        )
        logger.info(f"Verification corpus: {len(context['corpus'])} functions")
    return context["corpus"]


def corpus_up_to(context: dict[str, Any], limit: int) -> list[NamedFunction]:
    return [member for member in get_corpus(context) if member.table.n <= limit]


def rho_grid(context: dict[str, Any]) -> list[float]:
    return context.get("rho_grid", RHO_GRID)


def max_n(context: dict[str, Any]) -> int:
    return context.get("max_n", DEFAULT_MAX_N)


class ResidualTracker:
    """Keeps the worst residual seen and where it happened."""

    def __init__(self):
        self.worst = 0.0
        self.where = ""
        self.count = 0
        self.failures: list[str] = []

    def add(self, residual: float, where: str) -> None:
        self.count += 1
        if residual > self.worst:
            self.worst = residual
            self.where = where

    def fail(self, where: str) -> None:
        self.failures.append(where)

    def result(self, name: str, tolerance: float, extra: Optional[Iterable[str]] = None) -> CheckResult:
        passed = self.worst <= tolerance and not self.failures
        parts = [f"{self.count} comparisons"]
        if self.where:
            parts.append(f"worst at {self.where}")
        if self.failures:
            shown = ", ".join(self.failures[:5])
            more = f" (+{len(self.failures) - 5} more)" if len(self.failures) > 5 else ""
            parts.append(f"failed: {shown}{more}")
        parts.extend(extra or ())
        return CheckResult(
            name=name,
            passed=passed,
            worst_residual=self.worst,
            tolerance=tolerance,
            detail="; ".join(parts),
        )
