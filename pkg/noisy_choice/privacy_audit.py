"""
Exhaustive privacy audit of the noisy mechanism.

For every output value r the release probability P[M_ρ f(x) = r] is the noise
operator applied to the indicator of the level set {f = r}. The audit forms
these tables for all x at once, compares every profile with each of its n
single-vote neighbors, and reports the worst log-ratio against ln((1+ρ)/(1-ρ)).
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Union

import numpy as np

from noisy_choice.bf_core import BitVector, TruthTable, popcounts
from noisy_choice.config import require_within_cap
from noisy_choice.noise import RhoParam, apply_kernel, as_rho

logger = logging.getLogger(__name__)

TIGHTNESS_TOLERANCE = 1e-9
EXACT_MAX_N = 10
TIGHTNESS_MAX_N = 20


@dataclass(frozen=True)
class AuditWitness:
    """Where the worst ratio occurs: profile x, the voter whose flip is compared, and the output."""
    x: BitVector
    neighbor_index: int
    output_value: float


@dataclass(frozen=True)
class AuditReport:
    max_log_ratio: float
    attained_at: AuditWitness
    epsilon_bound: float
    tight: bool
    exact: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "max_log_ratio": self.max_log_ratio,
            "epsilon_bound": self.epsilon_bound,
            "tight": self.tight,
            "exact": self.exact,
            "attained_at": {
                "x": list(self.attained_at.x.votes()),
                "neighbor_index": self.attained_at.neighbor_index,
                "output_value": self.attained_at.output_value,
            },
        }


def _level_values(f: TruthTable) -> list[int]:
    signs = f.signs()
    return [r for r in (-1, 1) if np.any(signs == r)]


def output_distribution(
    f: TruthTable,
    x: BitVector,
    rho: Union[RhoParam, float],
) -> dict[float, float]:
    """
    Distribution of M_ρ f(x) over output values with nonzero probability.

    Raises:
        ValueError: On dimension mismatch
        CapExceededError: If n exceeds the audit cap
    """
    if x.n != f.n:
        raise ValueError(f"Dimension mismatch: profile has n={x.n}, function has n={f.n}")
    require_within_cap(f.n, "audit")
    param = as_rho(rho)
    n = f.n
    distances = popcounts(n)[np.arange(1 << n) ^ x.bits].astype(np.int64)
    # P[y | x] = keep^(n-d) flip^d
    weights = np.power(param.keep_prob, n - distances) * np.power(param.flip_prob, distances)
    signs = f.signs()
    distribution = {}
    for r in _level_values(f):
        probability = float(np.sum(weights[signs == r]))
        if probability > 0:
            distribution[float(r)] = probability
    return distribution


def _check_audit_rho(param: RhoParam) -> None:
    if param.rho <= 0.0 or param.rho >= 1.0:
        raise ValueError(
            f"audit needs 0 < rho < 1, got {param.rho} "
            f"(rho = 0 makes every ratio 1, rho = 1 makes ratios unbounded)"
        )


def audit(f: TruthTable, rho: Union[RhoParam, float], exact: bool = False) -> AuditReport:
    """
    Worst-case log likelihood ratio of M_ρ f over all neighboring profiles.

    Args:
        f: Social choice function
        rho: Noise parameter in (0, 1)
        exact: Use rational arithmetic (n <= 10); ρ is read from its decimal repr

    Returns:
        AuditReport with the attaining witness and the tightness flag

    Raises:
        ValueError: If rho is 0 or 1
        CapExceededError: If n exceeds the audit cap (or 10 in exact mode)
    """
    param = as_rho(rho)
    _check_audit_rho(param)
    require_within_cap(f.n, "audit")
    if exact:
        require_within_cap(f.n, "exact_audit", limit=EXACT_MAX_N)
        return _audit_exact(f, param)

    n = f.n
    indices = np.arange(1 << n)
    signs = f.signs()
    epsilon = param.epsilon()
    best = -math.inf
    witness = AuditWitness(BitVector(n, 0), 1, float(signs[0]))

    for r in _level_values(f):
        probabilities = apply_kernel((signs == r).astype(np.float64), n, param.keep_prob, param.flip_prob)
        with np.errstate(divide="ignore"):
            logs = np.log(probabilities)
        for i in range(1, n + 1):
            partner = indices ^ (1 << (i - 1))
            valid = (probabilities > 0) & (probabilities[partner] > 0)
            if not np.any(valid):
                continue
            ratios = np.where(valid, logs - logs[partner], -math.inf)
            k = int(np.argmax(ratios))
            if ratios[k] > best:
                best = float(ratios[k])
                witness = AuditWitness(BitVector(n, k), i, float(r))

    logger.debug(f"Audit n={n}, rho={param.rho}: max log-ratio {best} vs bound {epsilon}")
    return AuditReport(
        max_log_ratio=best,
        attained_at=witness,
        epsilon_bound=epsilon,
        tight=abs(best - epsilon) <= TIGHTNESS_TOLERANCE,
    )


def _fraction_log(value: Fraction) -> float:
    return math.log(value.numerator) - math.log(value.denominator)


def _audit_exact(f: TruthTable, param: RhoParam) -> AuditReport:
    n = f.n
    rho = Fraction(repr(param.rho))
    keep = (1 + rho) / 2
    flip = (1 - rho) / 2
    bound = keep / flip
    signs = f.signs()
    best = None
    witness = AuditWitness(BitVector(n, 0), 1, float(signs[0]))

    for r in _level_values(f):
        indicator = np.array([Fraction(int(s == r)) for s in signs], dtype=object)
        probabilities = apply_kernel(indicator, n, keep, flip)
        for i in range(1, n + 1):
            bit = 1 << (i - 1)
            for k in range(1 << n):
                p, q = probabilities[k], probabilities[k ^ bit]
                if p == 0 or q == 0:
                    continue
                ratio = p / q
                if best is None or ratio > best:
                    best = ratio
                    witness = AuditWitness(BitVector(n, k), i, float(r))

    best = best if best is not None else Fraction(1)
    return AuditReport(
        max_log_ratio=_fraction_log(best),
        attained_at=witness,
        epsilon_bound=_fraction_log(bound),
        tight=best == bound,
        exact=True,
    )


def tightness_condition(f: TruthTable) -> bool:
    """
    True iff some nonempty level set of f lies inside a half-cube {z : z_i = b}.

    Raises:
        CapExceededError: If n > 20
    """
    require_within_cap(f.n, "tightness", limit=TIGHTNESS_MAX_N)
    full = (1 << f.n) - 1
    indices = np.arange(1 << f.n, dtype=np.int64)
    signs = f.signs()
    for r in _level_values(f):
        members = indices[signs == r]
        # A bit set in every member means z_i = +1 throughout; clear in every member means -1
        if np.bitwise_and.reduce(members) != 0:
            return True
        if np.bitwise_and.reduce(full & ~members) != 0:
            return True
    return False
