"""
Tests for the verification suite runner and the registered checks.
"""

import json
import math
from typing import Any

import pytest

import noisy_choice.checks  # noqa: F401
from noisy_choice.analysis import WelfareValue, welfare
from noisy_choice.checks import analysis_checks
from noisy_choice.checks.common import ResidualTracker, build_context, get_corpus
from noisy_choice.config import CHECK_REGISTRY, build_suite_from_config, default_suite
from noisy_choice.suite import CheckResult, VerificationSuite


class ExplodingCheck:
    """Test check that always raises."""
    check_name = "exploding"
    tolerance = 1e-9

    def run(self, context: dict[str, Any]) -> CheckResult:
        raise RuntimeError("boom")


class PassingCheck:
    """Test check that passes with a small residual."""
    check_name = "passing"

    def run(self, context: dict[str, Any]) -> CheckResult:
        context["seen"] = True
        return CheckResult(name=self.check_name, passed=True, worst_residual=1e-12, tolerance=1e-9)


def test_raising_check_is_recorded_as_failure():
    """A raising check does not stop the suite."""
    suite = VerificationSuite([ExplodingCheck(), PassingCheck()], name="mixed")
    context: dict[str, Any] = {}

    summary = suite.run(context)

    assert not summary.passed
    assert [r.name for r in summary.results] == ["exploding", "passing"]
    assert summary.failures[0].detail == "raised RuntimeError: boom"
    assert math.isinf(summary.failures[0].worst_residual)
    assert context["seen"] is True


def test_summary_json_has_no_infinity():
    summary = VerificationSuite([ExplodingCheck()], name="bad").run()
    record = json.loads(summary.to_json())

    assert record["checks"][0]["worst_residual"] is None
    assert record["max_residual"] == 0.0
    assert record["passed"] is False


def test_suite_name_defaults():
    assert VerificationSuite([]).name == "unnamed_suite"
    assert VerificationSuite([]).run().passed


def test_residual_tracker():
    tracker = ResidualTracker()
    tracker.add(1e-12, "a")
    tracker.add(5e-10, "b")
    tracker.add(1e-11, "c")

    result = tracker.result("demo", 1e-9, extra=["note"])

    assert result.passed
    assert result.worst_residual == 5e-10
    assert result.detail == "3 comparisons; worst at b; note"

    tracker.fail("d")
    assert not tracker.result("demo", 1e-9).passed


def test_corpus_is_cached_and_seeded():
    context = build_context(max_n=4, corpus_seed=3)
    corpus = get_corpus(context)

    assert get_corpus(context) is corpus
    assert max(member.table.n for member in corpus) <= 4
    again = get_corpus(build_context(max_n=4, corpus_seed=3))
    assert [m.table for m in again] == [m.table for m in corpus]


@pytest.mark.parametrize("name", sorted(CHECK_REGISTRY))
def test_registered_check_passes(name):
    """Every check passes on a small corpus."""
    result = CHECK_REGISTRY[name]().run(build_context(max_n=5))

    assert result.name == name
    assert result.passed, result.detail


def test_tampered_welfare_fails():
    """Scaling welfare by a factor other than 1 is caught."""
    check = CHECK_REGISTRY["welfare_scaling"]()
    result = check.run(build_context(max_n=4, welfare_tamper=1.01))

    assert not result.passed


def test_quick_suite_passes():
    suite = build_suite_from_config({
        "suite": {
            "name": "smoke",
            "checks": [
                {"type": "parseval"},
                {"type": "epsilon_round_trip", "points": 11},
                {"type": "privacy_bound", "largest_n": 3},
            ],
        }
    })

    summary = suite.run(build_context(max_n=3))

    assert summary.passed
    assert summary.max_residual < 1e-9


def test_default_suite_order_matches_registry():
    names = [check.check_name for check in default_suite().checks]

    assert names == list(CHECK_REGISTRY)


def test_majority_gap_decays_like_one_over_n():
    """The fitted log-log slope of the majority gap is close to -1."""
    result = CHECK_REGISTRY["majority_gap_decay"]().run(build_context(max_n=3))

    slope = float(result.detail.split("fitted slope ")[-1])
    assert result.passed, result.detail
    assert -1.2 < slope < -0.8


def test_welfare_order_is_compared_across_the_whole_corpus(monkeypatch):
    """An order change between functions of different sizes is caught."""
    def shifted(f, rho):
        # Same order within each n, different order across n
        return WelfareValue(rho * welfare(f).value + 10.0 * f.n, "mechanism", rho)

    monkeypatch.setattr(analysis_checks, "mechanism_welfare", shifted)
    result = CHECK_REGISTRY["welfare_scaling"]().run(build_context(max_n=3))

    assert not result.passed
    assert "corpus welfare order" in result.detail
    assert "welfare order n=" not in result.detail
