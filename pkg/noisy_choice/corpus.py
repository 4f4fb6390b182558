"""
Named functions and the seeded verification corpus.

The corpus holds every named family for n = 1..max_n plus a fixed number of
uniformly random tables drawn from np.random.default_rng(seed), so property
checks see the same functions on every run with the same seed.
"""

import logging
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from noisy_choice.bf_core import FAMILY_KINDS, TruthTable, make_family, random_table
from noisy_choice.config import DEFAULT_SEED

logger = logging.getLogger(__name__)

DEFAULT_RANDOM_COUNT = 100
DEFAULT_RANDOM_MAX_N = 10

FAMILY_ALIASES = {
    "maj": "majority",
    "dict": "dictator",
    "const": "constant",
    "thr": "threshold",
}


@dataclass(frozen=True)
class NamedFunction:
    name: str
    table: TruthTable


def canonical_family(name: str) -> str:
    """Map CLI shorthands (maj, dict, ...) to family kinds."""
    kind = FAMILY_ALIASES.get(name.lower(), name.lower())
    if kind not in FAMILY_KINDS:
        known = sorted(set(FAMILY_KINDS) | set(FAMILY_ALIASES))
        raise ValueError(f"Unknown family '{name}'. Available families: {', '.join(known)}")
    return kind


def family_label(kind: str, n: int, params: Optional[dict[str, Any]] = None) -> str:
    params = params or {}
    if kind == "dictator":
        return f"dictator{params.get('i', 1)}_{n}"
    if kind == "threshold":
        return f"threshold{params.get('theta')}_{n}"
    if kind == "constant":
        return f"constant{params.get('value', 1):+d}_{n}"
    return f"{kind}_{n}"


def build_corpus(
    max_n: int = DEFAULT_RANDOM_MAX_N,
    seed: int = DEFAULT_SEED,
    random_count: int = DEFAULT_RANDOM_COUNT,
    random_max_n: Optional[int] = None,
) -> list[NamedFunction]:
    """
    Families for every n <= max_n plus random_count seeded random tables.

    Args:
        max_n: Largest voter count for the named families
        seed: Seed for the random tables
        random_count: Number of random tables
        random_max_n: Largest n for random tables (defaults to min(max_n, 10))

    Returns:
        Corpus members in a deterministic order
    """
    if max_n < 1:
        raise ValueError(f"max_n must be >= 1, got {max_n}")
    corpus: list[NamedFunction] = []

    for n in range(1, max_n + 1):
        if n % 2 == 1:
            corpus.append(NamedFunction(f"majority_{n}", make_family("majority", n)))
        corpus.append(NamedFunction(f"dictator1_{n}", make_family("dictator", n, i=1)))
        if n > 1:
            corpus.append(NamedFunction(f"dictator{n}_{n}", make_family("dictator", n, i=n)))
            corpus.append(NamedFunction(f"and_{n}", make_family("and", n)))
            corpus.append(NamedFunction(f"or_{n}", make_family("or", n)))
            corpus.append(NamedFunction(f"parity_{n}", make_family("parity", n)))
        if n >= 3:
            corpus.append(NamedFunction(f"threshold1_{n}", make_family("threshold", n, theta=1)))
    corpus.append(NamedFunction("constant+1_3", make_family("constant", 3, value=1)))
    corpus.append(NamedFunction("constant-1_3", make_family("constant", 3, value=-1)))

    top = min(max_n, DEFAULT_RANDOM_MAX_N) if random_max_n is None else random_max_n
    rng = np.random.default_rng(seed)
    for k in range(random_count):
        n = int(rng.integers(1, top + 1))
        corpus.append(NamedFunction(f"random{k:03d}_{n}", random_table(n, rng)))

    logger.debug(f"Built corpus of {len(corpus)} functions (max_n={max_n}, seed={seed})")
    return corpus
