"""
The ρ-correlated noisy mechanism, its privacy arithmetic and the noise operator.

Each voter's bit is kept with probability (1+ρ)/2 and flipped with probability
(1-ρ)/2; the mechanism releases f evaluated on the noised profile. The noise
operator T_ρ f(x) = E[f(y)] is computed exactly, by default in the Fourier
basis where it scales f̂(S) by ρ^|S|.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.special import expit

from noisy_choice.bf_core import (
    BitVector,
    FourierSpectrum,
    RealFunctionTable,
    TruthTable,
    inverse_wht,
    popcounts,
    wht,
)
from noisy_choice.config import require_within_cap

logger = logging.getLogger(__name__)

DIRECT_MAX_N = 12
DIRECT_ROW_CHUNK = 256

Seed = Union[int, np.random.SeedSequence]


class UnboundedPrivacyError(ValueError):
    """Raised when ε is requested for ρ = 1, where the mechanism releases f(x) unchanged."""


@dataclass(frozen=True)
class RhoParam:
    """
    Noise-retention parameter ρ in [0, 1].

    When built from ε by rho_of_epsilon, the source ε is carried along so the
    derived probabilities and epsilon() stay exact even where ρ rounds close to 1.
    """
    rho: float
    source_epsilon: Optional[float] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if isinstance(self.rho, bool) or not isinstance(self.rho, (int, float, np.floating)):
            raise TypeError(f"rho must be a real number, got {type(self.rho).__name__}")
        if not math.isfinite(self.rho) or not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1], got {self.rho}")
        object.__setattr__(self, "rho", float(self.rho))

    @property
    def flip_prob(self) -> float:
        if self.source_epsilon is not None:
            return float(expit(-self.source_epsilon))
        return (1.0 - self.rho) / 2.0

    @property
    def keep_prob(self) -> float:
        if self.source_epsilon is not None:
            return float(expit(self.source_epsilon))
        return (1.0 + self.rho) / 2.0

    def epsilon(self) -> float:
        """ln((1+ρ)/(1-ρ)); +inf at ρ = 1."""
        if self.source_epsilon is not None:
            return self.source_epsilon
        if self.rho == 1.0:
            return math.inf
        return math.log1p(self.rho) - math.log1p(-self.rho)


def as_rho(rho: Union[RhoParam, float]) -> RhoParam:
    """Accept a RhoParam or a bare float."""
    if isinstance(rho, RhoParam):
        return rho
    return RhoParam(rho)


def epsilon_of_rho(rho: Union[RhoParam, float]) -> float:
    """
    Privacy level preserved by the mechanism at this ρ.

    Raises:
        UnboundedPrivacyError: If ρ = 1
    """
    param = as_rho(rho)
    eps = param.epsilon()
    if math.isinf(eps):
        raise UnboundedPrivacyError("rho = 1 releases f(x) unchanged; no finite epsilon exists")
    return eps


def rho_of_epsilon(eps: float) -> RhoParam:
    """
    Largest ρ whose mechanism is ε-differentially private: ρ = 1 - 2/(e^ε + 1) = tanh(ε/2).

    Raises:
        ValueError: If eps is negative or NaN
    """
    if math.isnan(eps) or eps < 0:
        raise ValueError(f"epsilon must be nonnegative, got {eps}")
    if math.isinf(eps):
        return RhoParam(1.0)
    return RhoParam(math.tanh(eps / 2.0), source_epsilon=float(eps))


def privacy_ratio_bound(rho: Union[RhoParam, float]) -> float:
    """Worst-case likelihood ratio (1+ρ)/(1-ρ) between neighboring profiles."""
    param = as_rho(rho)
    return param.keep_prob / param.flip_prob if param.flip_prob > 0 else math.inf


@dataclass(frozen=True)
class MechanismSample:
    """One run of the mechanism: the true profile, the noised profile and the release."""
    input: BitVector
    output_vote: BitVector
    released: float


def _generator(rng_seed: Seed) -> np.random.Generator:
    return np.random.default_rng(rng_seed)


def flip_votes(votes: np.ndarray, rho: RhoParam, rng: np.random.Generator) -> np.ndarray:
    """Noise a ±1 array elementwise: each entry flips independently with probability (1-ρ)/2."""
    flips = rng.random(votes.shape) < rho.flip_prob
    return np.where(flips, -votes, votes).astype(votes.dtype)


def sample_correlated(x: BitVector, rho: Union[RhoParam, float], rng_seed: Seed) -> BitVector:
    """Draw y ~ N_ρ(x); deterministic for a given seed."""
    param = as_rho(rho)
    rng = _generator(rng_seed)
    flips = rng.random(x.n) < param.flip_prob
    mask = int.from_bytes(np.packbits(flips, bitorder="little").tobytes(), "little")
    return BitVector(n=x.n, bits=x.bits ^ mask)


def apply_mechanism(
    f: TruthTable,
    x: BitVector,
    rho: Union[RhoParam, float],
    rng_seed: Seed,
) -> MechanismSample:
    """Run M_ρ f on profile x once."""
    if x.n != f.n:
        raise ValueError(f"Dimension mismatch: profile has n={x.n}, function has n={f.n}")
    y = sample_correlated(x, rho, rng_seed)
    return MechanismSample(input=x, output_vote=y, released=float(f(y)))


def _as_values(f: Union[TruthTable, RealFunctionTable]) -> np.ndarray:
    if isinstance(f, TruthTable):
        return f.signs().astype(np.float64)
    return f.values


def scale_spectrum(spectrum: FourierSpectrum, rho: Union[RhoParam, float]) -> FourierSpectrum:
    """Multiply every f̂(S) by ρ^|S|."""
    param = as_rho(rho)
    factors = np.power(param.rho, spectrum.degrees().astype(np.float64))
    return FourierSpectrum(spectrum.n, spectrum.coeffs * factors)


def noise_operator(f: Union[TruthTable, RealFunctionTable], rho: Union[RhoParam, float]) -> RealFunctionTable:
    """
    Exact T_ρ f through the spectrum: transform, scale by ρ^|S|, invert.

    Raises:
        CapExceededError: If n exceeds the exhaustive cap
    """
    require_within_cap(f.n)
    return inverse_wht(scale_spectrum(wht(f), rho))


def apply_kernel(values: np.ndarray, n: int, keep, flip) -> np.ndarray:
    """
    Apply the per-voter 2x2 kernel [[keep, flip], [flip, keep]] along every coordinate.

    Only nonnegative combinations are formed, so probabilities stay accurate
    when they are tiny. Works on object arrays holding Fractions too.
    """
    out = values.copy()
    h = 1
    for _ in range(n):
        view = out.reshape(-1, 2, h)
        clear = view[:, 0, :].copy()
        set_ = view[:, 1, :].copy()
        view[:, 0, :] = keep * clear + flip * set_
        view[:, 1, :] = keep * set_ + flip * clear
        h *= 2
    return out


def noise_operator_positive(
    f: Union[TruthTable, RealFunctionTable],
    rho: Union[RhoParam, float],
) -> RealFunctionTable:
    """T_ρ f by coordinatewise averaging with the flip kernel."""
    require_within_cap(f.n)
    param = as_rho(rho)
    values = np.array(_as_values(f), dtype=np.float64)
    return RealFunctionTable(f.n, apply_kernel(values, f.n, param.keep_prob, param.flip_prob))


def noise_operator_direct(
    f: Union[TruthTable, RealFunctionTable],
    rho: Union[RhoParam, float],
) -> RealFunctionTable:
    """T_ρ f(x) = Σ_y P[y|x] f(y) by explicit summation; a reference for small n."""
    require_within_cap(f.n, "direct", limit=DIRECT_MAX_N)
    param = as_rho(rho)
    n = f.n
    values = _as_values(f)
    distances = np.arange(n + 1)
    # P[y|x] depends only on the Hamming distance d: keep^(n-d) flip^d
    weights = np.power(param.keep_prob, n - distances) * np.power(param.flip_prob, distances)
    counts = popcounts(n)
    indices = np.arange(1 << n)
    out = np.empty(1 << n)
    for start in range(0, 1 << n, DIRECT_ROW_CHUNK):
        rows = indices[start:start + DIRECT_ROW_CHUNK]
        out[rows] = weights[counts[rows[:, None] ^ indices[None, :]]] @ values
    return RealFunctionTable(n, out)
