"""
Seeded Monte-Carlo estimators for accuracy, welfare and probabilistic influence.

Functions are supplied as batch evaluators: a callable mapping an (m, n) int8
array of ±1 votes to m outputs of ±1. This lets majority on thousands of
voters be sampled without ever tabulating it.

Sampling is split into equal-size shards, each seeded from a child of
np.random.SeedSequence(seed); shard results are merged in shard order, so an
estimate depends only on (seed, samples, shards, chunk_size) and never on the
number of worker threads.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy.stats import norm

from noisy_choice.accuracy import AccuracyReport
from noisy_choice.analysis import WelfareValue
from noisy_choice.bf_core import FAMILY_KINDS, BitVector, TruthTable
from noisy_choice.noise import RhoParam, as_rho, flip_votes

logger = logging.getLogger(__name__)

Evaluator = Callable[[np.ndarray], np.ndarray]

MIN_SAMPLES = 100
CONFIDENCE_LEVELS = (0.95, 0.99)
WILSON_SIGMAS = 3.0


@dataclass(frozen=True)
class EstimatorConfig:
    """Sample size, seed and confidence level for one estimate."""
    samples: int
    seed: int
    confidence: float = 0.95
    shards: int = 1
    workers: int = 1
    chunk_size: int = 65536

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")
        if self.confidence not in CONFIDENCE_LEVELS:
            raise ValueError(f"confidence must be one of {CONFIDENCE_LEVELS}, got {self.confidence}")
        if self.shards < 1 or self.samples % self.shards != 0:
            raise ValueError(
                f"samples ({self.samples}) must split evenly into shards ({self.shards})"
            )
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.chunk_size < 1:
            raise ValueError(f"chunk_size must be >= 1, got {self.chunk_size}")

    @property
    def z(self) -> float:
        return float(norm.ppf(0.5 + self.confidence / 2.0))


@dataclass(frozen=True)
class Estimate:
    """A sample mean with its confidence-interval halfwidth."""
    value: float
    ci_halfwidth: float
    samples: int


def table_evaluator(f: TruthTable) -> Evaluator:
    """Look up each sampled profile in a truth table."""
    signs = f.signs()
    weights = np.left_shift(np.int64(1), np.arange(f.n, dtype=np.int64))

    def evaluate(votes: np.ndarray) -> np.ndarray:
        return signs[(votes == 1).astype(np.int64) @ weights]

    return evaluate


def threshold_evaluator(theta: float) -> Evaluator:
    """+1 iff Σx_i > θ."""
    def evaluate(votes: np.ndarray) -> np.ndarray:
        return np.where(votes.sum(axis=1, dtype=np.int64) > theta, 1, -1).astype(np.int8)

    return evaluate


def family_evaluator(
    kind: str,
    n: int,
    *,
    i: Optional[int] = None,
    theta: Optional[float] = None,
    value: int = 1,
) -> Evaluator:
    """Evaluator for a named family, without any size cap."""
    if kind not in FAMILY_KINDS:
        raise ValueError(f"Unknown family '{kind}'. Available families: {', '.join(FAMILY_KINDS)}")
    if kind == "majority":
        if n % 2 == 0:
            raise ValueError(f"Majority needs an odd number of voters, got n={n}")
        return threshold_evaluator(0)
    if kind == "threshold":
        if theta is None:
            raise ValueError("Family 'threshold' requires theta")
        return threshold_evaluator(theta)
    if kind == "dictator":
        if i is None or not 1 <= i <= n:
            raise ValueError(f"Dictator index must satisfy 1 <= i <= {n}, got i={i}")
        return lambda votes: votes[:, i - 1].astype(np.int8)
    if kind == "and":
        return lambda votes: np.where(np.all(votes == 1, axis=1), 1, -1).astype(np.int8)
    if kind == "or":
        return lambda votes: np.where(np.any(votes == 1, axis=1), 1, -1).astype(np.int8)
    if kind == "parity":
        return lambda votes: np.prod(votes, axis=1, dtype=np.int64).astype(np.int8)
    if value not in (-1, 1):
        raise ValueError(f"Constant value must be -1 or +1, got {value}")
    return lambda votes: np.full(votes.shape[0], value, dtype=np.int8)


def pointwise_evaluator(fn: Callable[[BitVector], int]) -> Evaluator:
    """Wrap a single-profile rule; slow, but accepts any Python callable."""
    def evaluate(votes: np.ndarray) -> np.ndarray:
        n = votes.shape[1]
        weights = 1 << np.arange(n, dtype=object)
        out = np.empty(votes.shape[0], dtype=np.int8)
        for row, profile in enumerate(votes):
            bits = int(np.sum(weights[profile == 1]))
            out[row] = fn(BitVector(n, bits))
        return out

    return evaluate


Statistic = Callable[[np.random.Generator, int], np.ndarray]


def _run_shard(statistic: Statistic, seed: np.random.SeedSequence, size: int, chunk_size: int) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < size:
        m = min(chunk_size, size - done)
        values = statistic(rng, m).astype(np.float64)
        total += float(values.sum())
        total_sq += float(np.dot(values, values))
        done += m
    return total, total_sq


def _sample_moments(statistic: Statistic, cfg: EstimatorConfig) -> tuple[float, float]:
    """Sum and sum of squares of the statistic over cfg.samples draws."""
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.shards)
    size = cfg.samples // cfg.shards
    logger.debug(f"Sampling {cfg.samples} draws in {cfg.shards} shards with seed {cfg.seed}")

    def run(seed: np.random.SeedSequence) -> tuple[float, float]:
        return _run_shard(statistic, seed, size, cfg.chunk_size)

    if cfg.workers > 1 and cfg.shards > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(run, seeds))
    else:
        parts = [run(seed) for seed in seeds]

    return sum(p[0] for p in parts), sum(p[1] for p in parts)


def proportion_halfwidth(p_hat: float, samples: int, z: float) -> float:
    """
    CI halfwidth for a proportion.

    Zero when every draw agreed; Wilson when p̂ is within three standard errors
    of 0 or 1; otherwise the normal approximation.
    """
    if p_hat <= 0.0 or p_hat >= 1.0:
        return 0.0
    sigma = math.sqrt(p_hat * (1.0 - p_hat) / samples)
    if p_hat - WILSON_SIGMAS * sigma > 0.0 and p_hat + WILSON_SIGMAS * sigma < 1.0:
        return z * sigma
    denominator = 1.0 + z * z / samples
    return z * math.sqrt(p_hat * (1.0 - p_hat) / samples + z * z / (4.0 * samples * samples)) / denominator


def mean_halfwidth(total: float, total_sq: float, samples: int, z: float) -> float:
    """Normal-approximation halfwidth from the sample standard deviation."""
    if samples < 2:
        return 0.0
    mean = total / samples
    variance = max(0.0, (total_sq - samples * mean * mean) / (samples - 1))
    return z * math.sqrt(variance / samples)


def _require_samples(cfg: EstimatorConfig) -> None:
    if cfg.samples < MIN_SAMPLES:
        raise ValueError(f"Monte-Carlo estimates need at least {MIN_SAMPLES} samples, got {cfg.samples}")


def _uniform_votes(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    return rng.integers(0, 2, size=(m, n), dtype=np.int8) * 2 - 1


def mc_accuracy(f_eval: Evaluator, n: int, rho: Union[RhoParam, float], cfg: EstimatorConfig) -> AccuracyReport:
    """Estimate P[f(y) = f(x)] with x uniform and y ~ N_ρ(x)."""
    _require_samples(cfg)
    param = as_rho(rho)

    def agreement(rng: np.random.Generator, m: int) -> np.ndarray:
        x = _uniform_votes(rng, m, n)
        y = flip_votes(x, param, rng)
        return f_eval(y) == f_eval(x)

    total, _ = _sample_moments(agreement, cfg)
    p_hat = total / cfg.samples
    halfwidth = proportion_halfwidth(p_hat, cfg.samples, cfg.z)
    logger.debug(f"mc_accuracy n={n} rho={param.rho}: {p_hat} ± {halfwidth}")
    return AccuracyReport.from_accuracy(p_hat, method="monte_carlo", ci_halfwidth=halfwidth)


def mc_welfare(
    f_eval: Evaluator,
    n: int,
    rho: Union[RhoParam, float],
    cfg: EstimatorConfig,
) -> tuple[WelfareValue, float]:
    """Estimate W(M_ρ f) = E[f(y) · Σx_i]; returns the value and its halfwidth."""
    _require_samples(cfg)
    param = as_rho(rho)

    def signed_agreement(rng: np.random.Generator, m: int) -> np.ndarray:
        x = _uniform_votes(rng, m, n)
        y = flip_votes(x, param, rng)
        return f_eval(y).astype(np.int64) * x.sum(axis=1, dtype=np.int64)

    total, total_sq = _sample_moments(signed_agreement, cfg)
    value = total / cfg.samples
    halfwidth = mean_halfwidth(total, total_sq, cfg.samples, cfg.z)
    return WelfareValue(value=value, basis="mechanism", rho=param.rho), halfwidth


def mc_probabilistic_influence(
    f_eval: Evaluator,
    i: int,
    n: int,
    rho: Union[RhoParam, float],
    cfg: EstimatorConfig,
) -> Estimate:
    """
    Estimate the probabilistic influence of voter i.

    Each draw takes x uniform, y_i ~ N_ρ(+1) and z_i ~ N_ρ(-1), keeps the other
    coordinates of x in both y and z, and scores ((f(y) - f(z)) / 2)².
    """
    if not 1 <= i <= n:
        raise ValueError(f"Voter index {i} out of range 1..{n}")
    _require_samples(cfg)
    param = as_rho(rho)

    def pivotal(rng: np.random.Generator, m: int) -> np.ndarray:
        x = _uniform_votes(rng, m, n)
        y = x.copy()
        z = x.copy()
        y[:, i - 1] = flip_votes(np.ones(m, dtype=np.int8), param, rng)
        z[:, i - 1] = flip_votes(-np.ones(m, dtype=np.int8), param, rng)
        diff = (f_eval(y).astype(np.int64) - f_eval(z).astype(np.int64)) // 2
        return diff * diff

    total, _ = _sample_moments(pivotal, cfg)
    value = total / cfg.samples
    return Estimate(value=value, ci_halfwidth=proportion_halfwidth(value, cfg.samples, cfg.z), samples=cfg.samples)
