"""
Noise stability and accuracy of the noisy mechanism.

Accuracy is P[M_ρ f(x) = f(x)] for uniform x, and always equals
(1 + Stab_ρ(f)) / 2. This module offers several engines for it: exact
spectral computation, closed forms for dictator/AND/OR, a level-set identity,
and a memoized dynamic program for threshold functions that runs in
polynomial time and therefore reaches n in the thousands.

The dynamic program works in the indicator convention P[Σy > θ]; results are
converted to ±1 expectations with E = 2p - 1 only when stability is formed.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.stats import binom

from noisy_choice.bf_core import TruthTable, inner_product, wht
from noisy_choice.config import get_settings, require_within_cap
from noisy_choice.noise import (
    RhoParam,
    apply_kernel,
    as_rho,
    noise_operator,
    scale_spectrum,
)

logger = logging.getLogger(__name__)

METHODS = ("closed_form", "exact_spectral", "exact_level_sets", "dp_memo", "monte_carlo")
CLOSED_FORM_KINDS = ("dictator", "and", "or")


@dataclass(frozen=True)
class AccuracyReport:
    """
    Stability of f under ρ-correlated noise, with the accuracy it implies.

    accuracy is derived from stability, so the two can never disagree.
    """
    stability: float
    method: str
    ci_halfwidth: Optional[float] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"Unknown method '{self.method}'. Available methods: {', '.join(METHODS)}")
        if self.ci_halfwidth is not None and self.method != "monte_carlo":
            raise ValueError("ci_halfwidth is only reported for monte_carlo estimates")

    @classmethod
    def from_accuracy(cls, accuracy: float, method: str, ci_halfwidth: Optional[float] = None) -> "AccuracyReport":
        return cls(stability=2.0 * accuracy - 1.0, method=method, ci_halfwidth=ci_halfwidth)

    @property
    def accuracy(self) -> float:
        return (1.0 + self.stability) / 2.0

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "stability": self.stability,
            "method": self.method,
            "ci_halfwidth": self.ci_halfwidth,
        }


def stability(f: TruthTable, rho: Union[RhoParam, float]) -> float:
    """Stab_ρ(f) = E[f(x) · T_ρ f(x)]."""
    require_within_cap(f.n)
    return inner_product(f, noise_operator(f, rho))


def stability_spectral(f: TruthTable, rho: Union[RhoParam, float]) -> float:
    """Stab_ρ(f) = Σ_S ρ^|S| f̂(S)²."""
    spectrum = wht(f)
    return float(np.dot(spectrum.coeffs, scale_spectrum(spectrum, rho).coeffs))


def accuracy_exact(f: TruthTable, rho: Union[RhoParam, float]) -> AccuracyReport:
    return AccuracyReport(stability=stability(f, rho), method="exact_spectral")


def accuracy_via_level_sets(f: TruthTable, rho: Union[RhoParam, float]) -> AccuracyReport:
    """
    Acc = 1 - 2·P[f=1] + 2·P[M_ρ f = 1 ∧ f = 1].

    Only nonnegative combinations are formed, independent of the spectral path.
    """
    require_within_cap(f.n)
    param = as_rho(rho)
    indicator = (f.signs() == 1).astype(np.float64)
    reaches_one = apply_kernel(indicator, f.n, param.keep_prob, param.flip_prob)
    p_one = float(np.mean(indicator))
    joint = float(np.mean(indicator * reaches_one))
    return AccuracyReport.from_accuracy(1.0 - 2.0 * p_one + 2.0 * joint, method="exact_level_sets")


def accuracy_closed_form(kind: str, n: int, rho: Union[RhoParam, float]) -> AccuracyReport:
    """
    Closed-form accuracy for dictator, AND and OR.

    Dictator: (1+ρ)/2. AND and OR: 1 - 2^(1-n) · (1 - ((1+ρ)/2)^n).

    Raises:
        ValueError: On unknown kind or n < 1
    """
    if kind not in CLOSED_FORM_KINDS:
        raise ValueError(
            f"No closed form for '{kind}'. Available kinds: {', '.join(CLOSED_FORM_KINDS)}"
        )
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    keep = as_rho(rho).keep_prob
    if kind == "dictator":
        acc = keep
    else:
        # 2^(1-n) underflows harmlessly to 0 for large n
        acc = 1.0 - math.ldexp(1.0, 1 - n) * (1.0 - keep ** n)
    return AccuracyReport.from_accuracy(acc, method="closed_form")


def asymptotic_majority_accuracy(rho: Union[RhoParam, float]) -> float:
    """Limit of majority accuracy as n grows: 1/2 + arcsin(ρ)/π."""
    return 0.5 + math.asin(as_rho(rho).rho) / math.pi


def majority_bounds(
    n: int,
    rho: Union[RhoParam, float],
    constant: Optional[float] = None,
) -> tuple[float, float]:
    """
    Accuracy bounds for majority on n voters.

    Args:
        n: Odd voter count
        rho: Noise parameter, must be below 1
        constant: Constant C of the upper bound; defaults to NOISY_CHOICE_BOUND_CONSTANT

    Returns:
        (1/2 + arcsin(ρ)/π, same + C / (sqrt(1-ρ²)·sqrt(n)))

    Raises:
        ValueError: If n is not odd and positive, or ρ = 1
    """
    if n < 1 or n % 2 == 0:
        raise ValueError(f"Majority bounds need an odd n >= 1, got n={n}")
    param = as_rho(rho)
    if param.rho >= 1.0:
        raise ValueError("Majority bounds are singular at rho = 1")
    if constant is None:
        constant = get_settings().bound_constant
    lower = asymptotic_majority_accuracy(param)
    upper = lower + constant / (math.sqrt(1.0 - param.rho ** 2) * math.sqrt(n))
    return lower, upper


class _MemoBase:
    """
    Shared key handling and counters for DP memo tables.

    A query (n, s, θ) asks for P[Σy > θ] where y is x noised and x has n
    coordinates summing to s. It is stored under the canonical key (m, j, u):
    m coordinates, j of them +1, at least u of the noised coordinates must be +1.
    """

    def __init__(self, rho: Union[RhoParam, float], retain: Optional[int] = None):
        self.rho = as_rho(rho)
        self.keep = self.rho.keep_prob
        self.flip = self.rho.flip_prob
        self.retain = get_settings().memo_retain if retain is None else retain
        self.expansions = 0
        self.hits = 0
        self._warned = False

    @staticmethod
    def key(n: int, s: int, theta: float) -> tuple[int, int, int]:
        return n, (n + s) // 2, needed_ones(theta, n)

    def _over_budget(self, extra: int, stored: int) -> bool:
        if stored + extra <= self.retain:
            return False
        if not self._warned:
            logger.warning(
                f"DP memo retention limit of {self.retain} states reached; "
                f"further intermediate states are recomputed (raise NOISY_CHOICE_MEMO_RETAIN to keep them)"
            )
            self._warned = True
        return True


class DpMemoTable(_MemoBase):
    """
    Dense memo: one (m+1) x m array per layer m, NaN marking missing states.

    State (m, j, u) lives at layer[m][j, u-1]; only 1 <= u <= m is stored since
    every other u is decided without recursion.
    """

    def __init__(self, rho: Union[RhoParam, float], retain: Optional[int] = None):
        super().__init__(rho, retain)
        self._layers: dict[int, np.ndarray] = {}
        self._allocated = 0

    def _layer(self, m: int, force: bool) -> Optional[np.ndarray]:
        layer = self._layers.get(m)
        if layer is None:
            size = (m + 1) * m
            if not force and self._over_budget(size, self._allocated):
                return None
            layer = np.full((m + 1, m), np.nan)
            self._layers[m] = layer
            self._allocated += size
        return layer

    def get(self, m: int, j: int, u: int) -> Optional[float]:
        layer = self._layers.get(m)
        if layer is None:
            return None
        value = layer[j, u - 1]
        return None if np.isnan(value) else float(value)

    def put(self, m: int, j: int, u: int, value: float, force: bool = False) -> bool:
        layer = self._layer(m, force)
        if layer is None:
            return False
        layer[j, u - 1] = value
        return True

    def get_row(self, m: int, u: int) -> Optional[np.ndarray]:
        """Values for every j at fixed (m, u), or None if any is missing."""
        layer = self._layers.get(m)
        if layer is None:
            return None
        column = layer[:, u - 1]
        return None if np.isnan(column).any() else column.copy()

    def put_rows(self, m: int, u_start: int, rows: np.ndarray, force: bool = False) -> bool:
        """Store rows[k][j] as state (m, j, u_start + k)."""
        layer = self._layer(m, force)
        if layer is None:
            return False
        layer[:, u_start - 1: u_start - 1 + len(rows)] = np.asarray(rows).T
        return True

    def __len__(self) -> int:
        return int(sum(np.count_nonzero(~np.isnan(layer)) for layer in self._layers.values()))


class HashDpMemoTable(_MemoBase):
    """Dictionary-backed memo with the same interface as DpMemoTable."""

    def __init__(self, rho: Union[RhoParam, float], retain: Optional[int] = None):
        super().__init__(rho, retain)
        self._store: dict[tuple[int, int, int], float] = {}

    def get(self, m: int, j: int, u: int) -> Optional[float]:
        return self._store.get((m, j, u))

    def put(self, m: int, j: int, u: int, value: float, force: bool = False) -> bool:
        key = (m, j, u)
        if key not in self._store and not force and self._over_budget(1, len(self._store)):
            return False
        self._store[key] = float(value)
        return True

    def get_row(self, m: int, u: int) -> Optional[np.ndarray]:
        values = [self._store.get((m, j, u)) for j in range(m + 1)]
        if any(v is None for v in values):
            return None
        return np.array(values)

    def put_rows(self, m: int, u_start: int, rows: np.ndarray, force: bool = False) -> bool:
        if not force and self._over_budget(len(rows) * (m + 1), len(self._store)):
            return False
        for k, row in enumerate(rows):
            for j, value in enumerate(row):
                self._store[(m, j, u_start + k)] = float(value)
        return True

    def __len__(self) -> int:
        return len(self._store)


MemoTable = Union[DpMemoTable, HashDpMemoTable]


def needed_ones(theta: float, m: int) -> int:
    """Smallest number of +1 coordinates among m for which Σy > θ."""
    return math.floor((theta + m) / 2) + 1


def _decided(m: int, u: int) -> Optional[float]:
    if u <= 0:
        return 1.0
    if u > m:
        return 0.0
    return None


def _children(m: int, j: int, u: int, keep: float, flip: float) -> tuple[tuple[float, tuple[int, int, int]], ...]:
    # Peel one coordinate: a +1 while any remain, otherwise a -1
    if j >= 1:
        return (keep, (m - 1, j - 1, u - 1)), (flip, (m - 1, j - 1, u))
    return (flip, (m - 1, 0, u - 1)), (keep, (m - 1, 0, u))


def dp_noise_operator(
    theta: int,
    x_sum: int,
    n: int,
    rho: Union[RhoParam, float],
    memo: Optional[MemoTable] = None,
) -> float:
    """
    P[Σy > θ] for y ~ N_ρ(x), where x is any n-vector summing to x_sum.

    Expands the recursion iteratively with an explicit stack, so depth is not
    limited by the interpreter, and records every computed state in memo.

    Args:
        theta: Threshold
        x_sum: Σx_i, with |x_sum| <= n and the same parity as n
        n: Number of coordinates (0 allowed: the empty sum is 0)
        rho: Noise parameter; must match memo's if memo is given
        memo: Table to read from and write to; a fresh DpMemoTable if None

    Returns:
        The probability, in [0, 1]

    Raises:
        ValueError: On invalid (x_sum, n) or a memo bound to a different ρ
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if abs(x_sum) > n or (x_sum + n) % 2 != 0:
        raise ValueError(f"x_sum={x_sum} is not the sum of {n} votes of ±1")
    param = as_rho(rho)
    if memo is None:
        memo = DpMemoTable(param)
    elif memo.rho.rho != param.rho:
        raise ValueError(f"Memo table is bound to rho={memo.rho.rho}, query uses rho={param.rho}")

    m, j, u = memo.key(n, x_sum, theta)
    decided = _decided(m, u)
    if decided is not None:
        return decided
    cached = memo.get(m, j, u)
    if cached is not None:
        memo.hits += 1
        return cached

    keep, flip = memo.keep, memo.flip
    # Values computed during this query; memo may decline to retain them
    scratch: dict[tuple[int, int, int], float] = {}

    def lookup(state: tuple[int, int, int]) -> Optional[float]:
        decided = _decided(state[0], state[2])
        if decided is not None:
            return decided
        if state in scratch:
            return scratch[state]
        return memo.get(*state)

    stack = [(m, j, u)]
    while stack:
        state = stack[-1]
        if state in scratch:
            stack.pop()
            continue
        children = _children(*state, keep, flip)
        pending = [child for _, child in children if lookup(child) is None]
        if pending:
            stack.extend(pending)
            continue
        value = sum(weight * lookup(child) for weight, child in children)
        scratch[state] = value
        memo.put(*state, value, force=(state == (m, j, u)))
        memo.expansions += 1
        stack.pop()

    logger.debug(f"dp_noise_operator(n={n}, s={x_sum}, θ={theta}): {len(scratch)} states expanded")
    return scratch[(m, j, u)]


def _fill_query_row(n: int, u0: int, keep: float, flip: float) -> tuple[np.ndarray, int]:
    """
    Bottom-up values of (n, j, u0) for j = 0..n, with the number of states computed.

    The recursion peels the j coordinates equal to +1 first, so every path
    from (n, j, u0) passes through some (n - j, 0, u0 - a), where a counts the
    +1 coordinates that kept their sign. Both halves are filled as tables:
    chain[m, u] holds the all -1 states (m, 0, u) and kept[j, a] the
    probability that exactly a of j coordinates equal to +1 keep their sign.
    """
    chain = np.zeros((n + 1, u0 + 1))
    chain[:, 0] = 1.0
    for m in range(1, n + 1):
        chain[m, 1:] = flip * chain[m - 1, :-1] + keep * chain[m - 1, 1:]

    kept = np.zeros((n + 1, n + 1))
    kept[0, 0] = 1.0
    for j in range(1, n + 1):
        kept[j, 1:] = keep * kept[j - 1, :-1] + flip * kept[j - 1, 1:]
        kept[j, 0] = flip * kept[j - 1, 0]

    j = np.arange(n + 1)
    # u <= 0 is certain, and chain[:, 0] is 1
    needed = np.clip(u0 - j, 0, None)
    row = np.sum(kept * chain[(n - j)[:, None], needed[None, :]], axis=1)
    return row, n * u0 + n * (n + 1) // 2


def accuracy_dp(
    theta: int,
    n: int,
    rho: Union[RhoParam, float],
    memo: Optional[MemoTable] = None,
) -> AccuracyReport:
    """
    Exact accuracy of M_ρ on the threshold function f_θ by dynamic programming.

    Inputs are grouped by their number j of +1 votes (C(n, j) inputs each);
    one representative per class is evaluated. With a memo the row of
    representatives is stored and later queries are answered from it through
    dp_noise_operator; without one nothing is retained.

    Args:
        theta: Integer threshold with |theta| <= n
        n: Number of voters
        rho: Noise parameter
        memo: Table to reuse across queries with the same ρ

    Returns:
        AccuracyReport with method dp_memo
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if abs(theta) > n:
        raise ValueError(f"|theta| must be <= n, got theta={theta} for n={n}")
    param = as_rho(rho)
    if memo is not None and memo.rho.rho != param.rho:
        raise ValueError(f"Memo table is bound to rho={memo.rho.rho}, query uses rho={param.rho}")

    j = np.arange(n + 1)
    u0 = needed_ones(theta, n)
    decided = _decided(n, u0)
    if decided is not None:
        probabilities = np.full(n + 1, decided)
    elif memo is None:
        logger.debug(f"Filling DP states for n={n}, θ={theta}, ρ={param.rho}")
        probabilities, _ = _fill_query_row(n, u0, param.keep_prob, param.flip_prob)
    else:
        if memo.get_row(n, u0) is None:
            logger.debug(f"Filling DP states for n={n}, θ={theta}, ρ={param.rho}")
            row, computed = _fill_query_row(n, u0, memo.keep, memo.flip)
            memo.put_rows(n, u0, row[None, :], force=True)
            memo.expansions += computed
        probabilities = np.array([
            dp_noise_operator(theta, 2 * int(k) - n, n, param, memo) for k in j
        ])

    signs = np.where(2 * j - n > theta, 1.0, -1.0)
    weights = binom.pmf(j, n, 0.5)
    stab = float(np.sum(weights * signs * (2.0 * probabilities - 1.0)))
    return AccuracyReport(stability=stab, method="dp_memo")
