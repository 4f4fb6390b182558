"""
Boolean functions on {-1,1}^n: representation, named families and spectra.

Inputs are packed bit patterns: bit i-1 of an index is set exactly when voter
i votes +1, so popcount gives the tally directly. A TruthTable stores the 2^n
output signs packed into bytes in the same little-endian bit order, which
makes the table index and the input pattern the same integer.
"""

import logging
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable, Iterable, Optional, Union

import numpy as np

from noisy_choice.config import require_within_cap

logger = logging.getLogger(__name__)

FAMILY_KINDS = ("majority", "dictator", "and", "or", "threshold", "parity", "constant")


@lru_cache(maxsize=None)
def popcounts(n: int) -> np.ndarray:
    """Popcount of every index below 2^n, as a read-only uint8 array."""
    counts = np.zeros(1, dtype=np.uint8)
    for _ in range(n):
        counts = np.concatenate([counts, counts + 1])
    counts.setflags(write=False)
    return counts


def vote_sums(n: int) -> np.ndarray:
    """Σx_i for every input index below 2^n."""
    return 2 * popcounts(n).astype(np.int64) - n


@dataclass(frozen=True)
class BitVector:
    """A vote profile x in {-1,1}^n packed into an integer."""
    n: int
    bits: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"BitVector needs n >= 1, got n={self.n}")
        if self.bits < 0 or self.bits >> self.n:
            raise ValueError(f"bits={self.bits} does not fit in n={self.n} voters")

    @classmethod
    def from_votes(cls, votes: Iterable[int]) -> "BitVector":
        votes = list(votes)
        bits = 0
        for position, vote in enumerate(votes):
            if vote not in (-1, 1):
                raise ValueError(f"Vote at position {position + 1} must be -1 or +1, got {vote}")
            if vote == 1:
                bits |= 1 << position
        return cls(n=len(votes), bits=bits)

    def vote(self, i: int) -> int:
        if not 1 <= i <= self.n:
            raise ValueError(f"Voter index {i} out of range 1..{self.n}")
        return 1 if (self.bits >> (i - 1)) & 1 else -1

    def votes(self) -> tuple[int, ...]:
        return tuple(self.vote(i) for i in range(1, self.n + 1))

    @property
    def total(self) -> int:
        return 2 * self.bits.bit_count() - self.n

    def flip(self, i: int) -> "BitVector":
        if not 1 <= i <= self.n:
            raise ValueError(f"Voter index {i} out of range 1..{self.n}")
        return BitVector(n=self.n, bits=self.bits ^ (1 << (i - 1)))


def packed_length(n: int) -> int:
    return max(1, (1 << n) // 8)


@dataclass(frozen=True, eq=False)
class TruthTable:
    """
    A social choice function f: {-1,1}^n -> {-1,1}.

    values holds 2^n bits, little-endian within each byte; bit k is set when
    f(x) = +1 for the input with index k.
    """
    n: int
    values: bytes

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"TruthTable needs n >= 1, got n={self.n}")
        expected = packed_length(self.n)
        if len(self.values) != expected:
            raise ValueError(
                f"Packed table for n={self.n} must be {expected} bytes, got {len(self.values)}"
            )
        size = 1 << self.n
        if size < 8 and self.values[0] >> size:
            raise ValueError(f"Bits beyond index {size - 1} must be zero")

    @classmethod
    def from_signs(cls, signs: Union[np.ndarray, Iterable[int]]) -> "TruthTable":
        """Build a table from 2^n output signs indexed by input pattern."""
        arr = np.asarray(signs)
        size = arr.shape[0] if arr.ndim == 1 else 0
        if size < 2 or size & (size - 1):
            raise ValueError(f"Sign vector length must be a power of two >= 2, got shape {arr.shape}")
        if not np.all((arr == 1) | (arr == -1)):
            raise ValueError("Social choice functions must output only -1 or +1")
        n = size.bit_length() - 1
        packed = np.packbits((arr == 1).astype(np.uint8), bitorder="little")
        return cls(n=n, values=packed.tobytes())

    @classmethod
    def from_function(cls, n: int, fn: Callable[[BitVector], int]) -> "TruthTable":
        """Tabulate a pointwise rule over all 2^n inputs."""
        require_within_cap(n)
        signs = np.array([fn(BitVector(n, bits)) for bits in range(1 << n)], dtype=np.int8)
        return cls.from_signs(signs)

    @property
    def size(self) -> int:
        return 1 << self.n

    @cached_property
    def _signs(self) -> np.ndarray:
        bits = np.unpackbits(np.frombuffer(self.values, dtype=np.uint8), bitorder="little")
        signs = bits[: self.size].astype(np.int8) * 2 - 1
        signs.setflags(write=False)
        return signs

    def signs(self) -> np.ndarray:
        """Output signs as a read-only int8 array of length 2^n."""
        return self._signs

    def as_real(self) -> "RealFunctionTable":
        return RealFunctionTable(self.n, self._signs.astype(np.float64))

    def positives(self) -> int:
        """Number of inputs mapped to +1."""
        return int(np.count_nonzero(self._signs == 1))

    def __call__(self, x: Union[BitVector, int]) -> int:
        if isinstance(x, BitVector):
            if x.n != self.n:
                raise ValueError(f"Input has n={x.n} but table has n={self.n}")
            index = x.bits
        else:
            index = int(x)
            if not 0 <= index < self.size:
                raise ValueError(f"Index {index} out of range for n={self.n}")
        return 1 if (self.values[index >> 3] >> (index & 7)) & 1 else -1

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TruthTable):
            return NotImplemented
        return self.n == other.n and self.values == other.values

    def __hash__(self) -> int:
        return hash((self.n, self.values))


@dataclass(frozen=True, eq=False)
class RealFunctionTable:
    """A real-valued function on {-1,1}^n, stored as 2^n float64 values."""
    n: int
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        if arr.shape != (1 << self.n,):
            raise ValueError(f"Expected {1 << self.n} values for n={self.n}, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("RealFunctionTable entries must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __call__(self, x: Union[BitVector, int]) -> float:
        index = x.bits if isinstance(x, BitVector) else int(x)
        return float(self.values[index])


@dataclass(frozen=True, eq=False)
class FourierSpectrum:
    """Fourier coefficients f̂(S), indexed by subset bitmask (bit i-1 ⇔ voter i in S)."""
    n: int
    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=np.float64)
        if arr.shape != (1 << self.n,):
            raise ValueError(f"Expected {1 << self.n} coefficients for n={self.n}, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    def __getitem__(self, mask: int) -> float:
        return float(self.coeffs[mask])

    def coefficient(self, voters: Iterable[int]) -> float:
        """f̂(S) for S given as 1-based voter indices."""
        mask = 0
        for i in voters:
            if not 1 <= i <= self.n:
                raise ValueError(f"Voter index {i} out of range 1..{self.n}")
            mask |= 1 << (i - 1)
        return self[mask]

    def degrees(self) -> np.ndarray:
        return popcounts(self.n)

    def level_weight(self, k: int) -> float:
        """Σ f̂(S)² over |S| = k."""
        return float(np.sum(self.coeffs[self.degrees() == k] ** 2))

    def singletons(self) -> np.ndarray:
        """f̂({i}) for i = 1..n."""
        return np.array([self.coeffs[1 << (i - 1)] for i in range(1, self.n + 1)])

    def parseval(self) -> float:
        return float(np.sum(self.coeffs ** 2))


def _butterfly(values: np.ndarray, n: int, inverse: bool) -> np.ndarray:
    out = np.array(values, dtype=np.float64)
    h = 1
    for _ in range(n):
        view = out.reshape(-1, 2, h)
        clear = view[:, 0, :].copy()
        set_ = view[:, 1, :].copy()
        if inverse:
            view[:, 0, :] = clear - set_
            view[:, 1, :] = clear + set_
        else:
            view[:, 0, :] = clear + set_
            view[:, 1, :] = set_ - clear
        h *= 2
    return out


def _real_values(f: Union[TruthTable, RealFunctionTable]) -> np.ndarray:
    if isinstance(f, TruthTable):
        return f.signs().astype(np.float64)
    return f.values


def wht(f: Union[TruthTable, RealFunctionTable]) -> FourierSpectrum:
    """
    Fast Walsh-Hadamard transform.

    Args:
        f: Table to transform

    Returns:
        FourierSpectrum with coeffs[mask] = 2^-n Σ_x f(x) χ_S(x)

    Raises:
        CapExceededError: If n exceeds the exhaustive cap
    """
    require_within_cap(f.n)
    logger.debug(f"WHT of size 2^{f.n}")
    coeffs = _butterfly(_real_values(f), f.n, inverse=False) / float(1 << f.n)
    return FourierSpectrum(f.n, coeffs)


def inverse_wht(spectrum: FourierSpectrum) -> RealFunctionTable:
    """Rebuild f(x) = Σ_S f̂(S) χ_S(x) from a spectrum."""
    require_within_cap(spectrum.n)
    return RealFunctionTable(spectrum.n, _butterfly(spectrum.coeffs, spectrum.n, inverse=True))


def inner_product(
    f: Union[TruthTable, RealFunctionTable],
    g: Union[TruthTable, RealFunctionTable],
) -> float:
    """E_x[f(x) g(x)] under the uniform distribution."""
    if f.n != g.n:
        raise ValueError(f"Dimension mismatch: n={f.n} vs n={g.n}")
    return float(np.mean(_real_values(f) * _real_values(g)))


def is_monotone(f: TruthTable) -> bool:
    """True iff raising any single vote from -1 to +1 never lowers f."""
    signs = f.signs()
    h = 1
    for _ in range(f.n):
        view = signs.reshape(-1, 2, h)
        if np.any(view[:, 1, :] < view[:, 0, :]):
            return False
        h *= 2
    return True


def character(mask: int, n: int) -> RealFunctionTable:
    """The parity χ_S(x) = Π_{i∈S} x_i as a table."""
    if mask < 0 or mask >> n:
        raise ValueError(f"Mask {mask} is not a subset of {n} voters")
    indices = np.arange(1 << n, dtype=np.int64)
    agreeing = popcounts(n)[indices & mask].astype(np.int64)
    minus_ones = mask.bit_count() - agreeing
    return RealFunctionTable(n, np.where(minus_ones % 2 == 0, 1.0, -1.0))


def derivative(f: Union[TruthTable, RealFunctionTable], i: int) -> RealFunctionTable:
    """D_i f(x) = (f(x_{i→1}) - f(x_{i→-1})) / 2."""
    if not 1 <= i <= f.n:
        raise ValueError(f"Voter index {i} out of range 1..{f.n}")
    values = _real_values(f)
    bit = 1 << (i - 1)
    indices = np.arange(1 << f.n)
    return RealFunctionTable(f.n, (values[indices | bit] - values[indices & ~bit]) / 2.0)


def make_family(
    kind: str,
    n: int,
    *,
    i: Optional[int] = None,
    theta: Optional[float] = None,
    value: int = 1,
) -> TruthTable:
    """
    Construct one of the named social choice functions.

    Args:
        kind: One of FAMILY_KINDS
        n: Number of voters
        i: Voter index for dictator (1-based)
        theta: Threshold for threshold(θ); f(x) = +1 iff Σx_i > θ
        value: Output of the constant function

    Returns:
        The family member as a TruthTable

    Raises:
        ValueError: On unknown kind, even-n majority, or bad parameters
        CapExceededError: If n exceeds the exhaustive cap
    """
    if kind not in FAMILY_KINDS:
        raise ValueError(f"Unknown family '{kind}'. Available families: {', '.join(FAMILY_KINDS)}")
    if n < 1:
        raise ValueError(f"Family '{kind}' needs n >= 1, got n={n}")
    require_within_cap(n)

    sums = vote_sums(n)
    indices = np.arange(1 << n, dtype=np.int64)

    if kind == "majority":
        if n % 2 == 0:
            raise ValueError(f"Majority needs an odd number of voters (sign(0) is undefined), got n={n}")
        signs = np.where(sums > 0, 1, -1)
    elif kind == "threshold":
        if theta is None:
            raise ValueError("Family 'threshold' requires theta")
        signs = np.where(sums > theta, 1, -1)
    elif kind == "dictator":
        if i is None or not 1 <= i <= n:
            raise ValueError(f"Dictator index must satisfy 1 <= i <= {n}, got i={i}")
        signs = np.where((indices >> (i - 1)) & 1, 1, -1)
    elif kind == "and":
        signs = np.where(indices == (1 << n) - 1, 1, -1)
    elif kind == "or":
        signs = np.where(indices == 0, -1, 1)
    elif kind == "parity":
        signs = character((1 << n) - 1, n).values
    else:
        if value not in (-1, 1):
            raise ValueError(f"Constant value must be -1 or +1, got {value}")
        signs = np.full(1 << n, value)

    logger.debug(f"Built family {kind} for n={n}")
    return TruthTable.from_signs(signs.astype(np.int8))


def random_table(n: int, rng: np.random.Generator) -> TruthTable:
    """Uniformly random social choice function on n voters."""
    require_within_cap(n)
    return TruthTable.from_signs(rng.integers(0, 2, size=1 << n, dtype=np.int8) * 2 - 1)
