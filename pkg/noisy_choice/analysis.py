"""
Influence and welfare of social choice functions and of the noisy mechanism.

Everything here is computed exactly by enumerating {-1,1}^n, so the scaling
laws I_i[M_ρ f] = (1+ρ²)/2 · I_i[f] and W(M_ρ f) = ρ · W(f) can be checked
to floating-point precision rather than sampled.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from noisy_choice.bf_core import (
    RealFunctionTable,
    TruthTable,
    derivative,
    is_monotone,
    make_family,
    vote_sums,
    wht,
)
from noisy_choice.config import CapExceededError, require_within_cap
from noisy_choice.noise import RhoParam, apply_kernel, as_rho, noise_operator

logger = logging.getLogger(__name__)

WELFARE_SEARCH_MAX_N = 4
TIE_TOLERANCE = 1e-9

Table = Union[TruthTable, RealFunctionTable]


class NotMonotoneError(ValueError):
    """Raised when a monotone-only identity is applied to a non-monotone function."""


@dataclass(frozen=True)
class InfluenceProfile:
    """Per-voter influences and their total."""
    per_voter: tuple[float, ...]
    total: float

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "InfluenceProfile":
        per_voter = tuple(float(v) for v in values)
        return cls(per_voter=per_voter, total=float(sum(per_voter)))


@dataclass(frozen=True)
class WelfareValue:
    """Expected agreeing-minus-disagreeing votes, for f itself or for M_ρ f."""
    value: float
    basis: str
    rho: Optional[float] = None

    def __post_init__(self):
        if self.basis not in ("deterministic", "mechanism"):
            raise ValueError(f"basis must be 'deterministic' or 'mechanism', got {self.basis!r}")


def _values(f: Table) -> np.ndarray:
    if isinstance(f, TruthTable):
        return f.signs().astype(np.float64)
    return f.values


def _check_voter(f: Table, i: int) -> None:
    if not 1 <= i <= f.n:
        raise ValueError(f"Voter index {i} out of range 1..{f.n}")


def _pairs(values: np.ndarray, i: int) -> tuple[np.ndarray, np.ndarray]:
    """Split a table into (x_i = -1, x_i = +1) halves aligned by the other coordinates."""
    view = values.reshape(-1, 2, 1 << (i - 1))
    return view[:, 0, :], view[:, 1, :]


def influence(f: TruthTable, i: int) -> float:
    """
    P_x[f(x_{i→1}) ≠ f(x_{i→-1})].

    Args:
        f: Social choice function
        i: Voter index, 1-based

    Returns:
        Exact influence of voter i

    Raises:
        ValueError: If i is out of range
    """
    _check_voter(f, i)
    require_within_cap(f.n)
    low, high = _pairs(f.signs(), i)
    return float(np.mean(low != high))


def derivative_influence(f: Table, i: int) -> float:
    """E_x[(D_i f(x))²]; valid for real-valued tables too."""
    _check_voter(f, i)
    require_within_cap(f.n)
    return float(np.mean(derivative(f, i).values ** 2))


def influence_via_fourier(f: TruthTable, i: int) -> float:
    """
    f̂({i}), which equals I_i[f] for monotone f.

    Raises:
        NotMonotoneError: If f is not monotone
    """
    _check_voter(f, i)
    if not is_monotone(f):
        raise NotMonotoneError("influence_via_fourier requires a monotone function")
    return wht(f).coefficient([i])


def influence_profile(f: TruthTable) -> InfluenceProfile:
    return InfluenceProfile.from_values([influence(f, i) for i in range(1, f.n + 1)])


def probabilistic_influence(f: Table, i: int, rho: Union[RhoParam, float]) -> float:
    """
    Influence of voter i on M_ρ f, with the other coordinates left un-noised.

    Voter i's bit is drawn once from N_ρ(+1) (y_i) and once from N_ρ(-1) (z_i);
    the four joint outcomes are enumerated with their exact weights.
    """
    _check_voter(f, i)
    require_within_cap(f.n)
    param = as_rho(rho)
    keep, flip = param.keep_prob, param.flip_prob
    low, high = _pairs(_values(f), i)
    halves = {1: high, -1: low}
    # (y_i, z_i) -> P[y_i | +1] · P[z_i | -1]
    outcomes = {
        (1, -1): keep * keep,
        (-1, 1): flip * flip,
        (1, 1): keep * flip,
        (-1, -1): flip * keep,
    }
    total = 0.0
    for (y_i, z_i), weight in outcomes.items():
        total += weight * float(np.mean(((halves[y_i] - halves[z_i]) / 2.0) ** 2))
    return total


def probabilistic_influence_nested(f: Table, i: int, rho: Union[RhoParam, float]) -> float:
    """
    Two-stage probabilistic influence: y ~ N_ρ(x_{i→1}), then z agrees with y
    except z_i ~ N_ρ(-1).

    Computed as E_x[(T_ρ g)(x_{i→1})] with
    g(y) = Σ_{z_i} P[z_i | -1] · ((f(y) - f(y_{i→z_i})) / 2)².
    """
    _check_voter(f, i)
    require_within_cap(f.n)
    param = as_rho(rho)
    values = _values(f)
    bit = 1 << (i - 1)
    indices = np.arange(1 << f.n)
    f_up = values[indices | bit]
    f_down = values[indices & ~bit]
    g = (
        param.keep_prob * ((values - f_down) / 2.0) ** 2
        + param.flip_prob * ((values - f_up) / 2.0) ** 2
    )
    smoothed = apply_kernel(g, f.n, param.keep_prob, param.flip_prob)
    return float(np.mean(smoothed[indices | bit]))


def total_probabilistic_influence(f: Table, rho: Union[RhoParam, float]) -> float:
    return float(sum(probabilistic_influence(f, i, rho) for i in range(1, f.n + 1)))


def welfare(f: TruthTable) -> WelfareValue:
    """W(f) = E_x[f(x) · Σx_i]."""
    require_within_cap(f.n)
    value = float(np.mean(f.signs() * vote_sums(f.n)))
    return WelfareValue(value=value, basis="deterministic")


def welfare_via_fourier(f: TruthTable) -> WelfareValue:
    """W(f) = Σ_i f̂({i})."""
    return WelfareValue(value=float(np.sum(wht(f).singletons())), basis="deterministic")


def mechanism_welfare(f: TruthTable, rho: Union[RhoParam, float]) -> WelfareValue:
    """W(M_ρ f) = E_x[T_ρ f(x) · Σx_i], using the exact noise operator."""
    require_within_cap(f.n)
    param = as_rho(rho)
    smoothed = noise_operator(f, param)
    value = float(np.mean(smoothed.values * vote_sums(f.n)))
    return WelfareValue(value=value, basis="mechanism", rho=param.rho)


def _require_searchable(n: int) -> None:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n > WELFARE_SEARCH_MAX_N:
        raise CapExceededError("welfare_search", WELFARE_SEARCH_MAX_N, n)


def enumerate_welfare(n: int) -> np.ndarray:
    """
    Welfare of every social choice function on n voters.

    Entry t is W(f) for the table whose packed bit pattern is the integer t.
    """
    _require_searchable(n)
    size = 1 << n
    tables = np.arange(1 << size, dtype=np.int64)
    bits = (tables[:, None] >> np.arange(size)[None, :]) & 1
    signs = (bits * 2 - 1).astype(np.int8)
    logger.debug(f"Enumerated {1 << size} tables for n={n}")
    return signs @ vote_sums(n) / float(size)


def _table_from_index(n: int, t: int) -> TruthTable:
    size = 1 << n
    signs = np.array([1 if (t >> k) & 1 else -1 for k in range(size)], dtype=np.int8)
    return TruthTable.from_signs(signs)


def welfare_maximizers(n: int) -> list[TruthTable]:
    """Every social choice function on n <= 4 voters that attains the maximum welfare."""
    welfares = enumerate_welfare(n)
    best = welfares.max()
    winners = np.flatnonzero(welfares >= best - TIE_TOLERANCE)
    logger.debug(f"n={n}: max welfare {best} attained by {len(winners)} tables")
    return [_table_from_index(n, int(t)) for t in winners]


def argmax_welfare(n: int) -> TruthTable:
    """
    Exhaustively find the welfare maximizer for odd n <= 4.

    Raises:
        ValueError: If n is even
        CapExceededError: If n is too large to enumerate
        RuntimeError: If the maximizer is not unique or is not majority
    """
    _require_searchable(n)
    if n % 2 == 0:
        raise ValueError(f"argmax_welfare needs odd n (even n has tied maximizers), got n={n}")
    maximizers = welfare_maximizers(n)
    if len(maximizers) != 1:
        raise RuntimeError(f"Expected a unique welfare maximizer for n={n}, found {len(maximizers)}")
    winner = maximizers[0]
    if winner != make_family("majority", n):
        raise RuntimeError(f"Welfare maximizer for n={n} is not the majority function")
    return winner


def tolerant_ranks(values: Sequence[float], tol: float = TIE_TOLERANCE) -> np.ndarray:
    """Dense ranks where values within tol of their sorted predecessor share a rank."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        return np.zeros(0, dtype=np.int64)
    order = np.argsort(arr, kind="stable")
    new_rank = np.diff(arr[order]) > tol
    sorted_ranks = np.concatenate([[0], np.cumsum(new_rank)])
    ranks = np.empty(arr.size, dtype=np.int64)
    ranks[order] = sorted_ranks
    return ranks


def ranks_agree(before: Sequence[float], after: Sequence[float], tol: float = TIE_TOLERANCE) -> bool:
    """True iff both sequences induce the same ordering, ties included."""
    if len(before) != len(after):
        raise ValueError(f"Length mismatch: {len(before)} vs {len(after)}")
    return bool(np.array_equal(tolerant_ranks(before, tol), tolerant_ranks(after, tol)))
