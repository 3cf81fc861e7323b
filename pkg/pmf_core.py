"""
Discrete distributions on the rating scale 1..K.

Pmf and RatingCounts are immutable values (their arrays are read-only).
Natural logarithms are used throughout. Random draws use NumPy's PCG64
generator seeded through numpy.random.default_rng, so a fixed seed gives the
same counts on every platform.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np

from config import Config
from errors import DomainError

logger = logging.getLogger(__name__)

SUM_TOLERANCE = 1e-12
_DEGENERATE_SPREAD = 1e-12


def _readonly(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


def categories(K: int) -> np.ndarray:
    """Category values 1..K"""
    return np.arange(1, K + 1, dtype=float)


def make_rng(seed: Optional[Union[int, np.random.SeedSequence]]) -> np.random.Generator:
    """PCG64 generator for a seed (or spawned seed sequence)"""
    return np.random.default_rng(seed)


@dataclass(frozen=True, eq=False)
class Pmf:
    """Probability mass over the categories 1..K"""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size < 2:
            raise DomainError(f"a PMF needs a vector of at least 2 entries, got shape {probs.shape}")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0.0):
            raise DomainError(f"PMF entries must be finite and non-negative: {probs}")
        total = probs.sum()
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise DomainError(f"PMF entries must sum to 1 (sum={total!r})")
        object.__setattr__(self, "probs", _readonly(probs))

    @classmethod
    def from_weights(cls, weights) -> "Pmf":
        """Normalize non-negative weights into a PMF"""
        weights = np.clip(np.asarray(weights, dtype=float), 0.0, None)
        return cls(weights / weights.sum())

    @classmethod
    def uniform(cls, K: int = Config.NUM_CATEGORIES) -> "Pmf":
        return cls(np.full(K, 1.0 / K))

    @classmethod
    def point_mass(cls, k: int, K: int = Config.NUM_CATEGORIES) -> "Pmf":
        if not 1 <= k <= K:
            raise DomainError(f"category {k} outside 1..{K}")
        probs = np.zeros(K)
        probs[k - 1] = 1.0
        return cls(probs)

    @property
    def K(self) -> int:
        return self.probs.size

    def cdf(self) -> np.ndarray:
        """Cumulative probabilities at categories 1..K"""
        return np.cumsum(self.probs)

    def __eq__(self, other) -> bool:
        return isinstance(other, Pmf) and np.array_equal(self.probs, other.probs)

    def __hash__(self) -> int:
        return hash(self.probs.tobytes())

    def __repr__(self) -> str:
        return f"Pmf({np.array2string(self.probs, precision=6, separator=', ')})"


@dataclass(frozen=True, eq=False)
class RatingCounts:
    """Observed number of ratings per category for one stimulus"""

    counts: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.counts)
        if raw.ndim != 1 or raw.size < 2:
            raise DomainError(f"counts need a vector of at least 2 entries, got shape {raw.shape}")
        counts = raw.astype(np.int64)
        if not np.array_equal(counts, raw):
            raise DomainError(f"counts must be integers: {raw}")
        if np.any(counts < 0):
            raise DomainError(f"counts must be non-negative: {counts}")
        object.__setattr__(self, "counts", _readonly(counts))

    @property
    def K(self) -> int:
        return self.counts.size

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __eq__(self, other) -> bool:
        return isinstance(other, RatingCounts) and np.array_equal(self.counts, other.counts)

    def __hash__(self) -> int:
        return hash(self.counts.tobytes())

    def __repr__(self) -> str:
        return f"RatingCounts({self.counts.tolist()})"


@dataclass(frozen=True)
class Moments:
    """Mean, variance and the complementary normalized variance of a PMF"""

    psi: float
    v: float
    v_min: float
    v_max: float
    rho: Optional[float]

    @property
    def rho_defined(self) -> bool:
        """rho is undefined where the variance range collapses (psi at 1 or K)"""
        return self.rho is not None


class Metric(Enum):
    """Distances between PMFs on the same scale"""
    LINF = "linf"
    EUCLIDEAN = "euclidean"
    BHATTACHARYYA = "bhattacharyya"
    KOLMOGOROV_SMIRNOV = "ks"
    WASSERSTEIN = "wasserstein"


def parse_metric(name: str) -> Metric:
    try:
        return Metric(name.strip().lower())
    except ValueError:
        valid = ", ".join(m.value for m in Metric)
        raise DomainError(f"unknown metric '{name}'; valid metrics: {valid}") from None


def mean(p: Pmf) -> float:
    """Mean opinion score sum_k k p_k"""
    return float(np.dot(categories(p.K), p.probs))


def variance(p: Pmf) -> float:
    psi = mean(p)
    return float(np.dot((categories(p.K) - psi) ** 2, p.probs))


def variance_bounds(psi: float, K: int = Config.NUM_CATEGORIES) -> Tuple[float, float]:
    """Smallest and largest variance of any PMF on 1..K with mean psi"""
    if not 1.0 <= psi <= K:
        raise DomainError(f"mean {psi} outside [1, {K}]")
    v_min = (np.ceil(psi) - psi) * (psi - np.floor(psi))
    v_max = (psi - 1.0) * (K - psi)
    return float(v_min), float(v_max)


def complementary_normalized_variance(psi: float, v: float, K: int = Config.NUM_CATEGORIES) -> Optional[float]:
    """rho = (v_max - v) / (v_max - v_min), None when the range collapses"""
    v_min, v_max = variance_bounds(psi, K)
    if v_max - v_min <= _DEGENERATE_SPREAD:
        return None
    return float(np.clip((v_max - v) / (v_max - v_min), 0.0, 1.0))


def moments(p: Pmf) -> Moments:
    psi = float(np.clip(mean(p), 1.0, p.K))
    v = variance(p)
    v_min, v_max = variance_bounds(psi, p.K)
    rho = complementary_normalized_variance(psi, v, p.K)
    return Moments(psi=psi, v=v, v_min=v_min, v_max=v_max, rho=rho)


def entropy(p: Pmf) -> float:
    """Shannon entropy in nats, with 0 ln 0 = 0"""
    nz = p.probs[p.probs > 0.0]
    return float(-np.sum(nz * np.log(nz)))


def cross_entropy(p: Pmf, q: Pmf, floor: Optional[float] = None) -> float:
    """H(p, q) = -sum p_k ln q_k; +inf when p puts mass where q has none"""
    _check_same_scale(p, q)
    mask = p.probs > 0.0
    q_k = q.probs[mask]
    if floor is not None:
        q_k = np.maximum(q_k, floor)
    elif np.any(q_k <= 0.0):
        return float("inf")
    return float(-np.sum(p.probs[mask] * np.log(q_k)))


def _check_same_scale(p: Pmf, q: Pmf):
    if p.K != q.K:
        raise DomainError(f"PMFs on different scales: K={p.K} vs K={q.K}")


def distance(p: Pmf, q: Pmf, metric: Metric) -> float:
    """Distance between two PMFs; Bhattacharyya is +inf for disjoint supports"""
    _check_same_scale(p, q)
    diff = p.probs - q.probs
    if metric is Metric.LINF:
        return float(np.max(np.abs(diff)))
    if metric is Metric.EUCLIDEAN:
        return float(np.sqrt(np.sum(diff ** 2)))
    if metric is Metric.BHATTACHARYYA:
        coefficient = float(np.sum(np.sqrt(p.probs * q.probs)))
        if coefficient <= 0.0:
            return float("inf")
        return max(0.0, -float(np.log(min(coefficient, 1.0))))
    cdf_diff = np.abs(np.cumsum(diff))
    if metric is Metric.KOLMOGOROV_SMIRNOV:
        return float(np.max(cdf_diff))
    if metric is Metric.WASSERSTEIN:
        # unit spacing; the last CDF difference is zero
        return float(np.sum(cdf_diff[:-1]))
    raise DomainError(f"unsupported metric: {metric}")


def sample(p: Pmf, n: int, seed: Optional[Union[int, np.random.SeedSequence, np.random.Generator]] = None) -> RatingCounts:
    """n i.i.d. ratings drawn from p, summarized as counts"""
    if n < 1:
        raise DomainError(f"sample size must be at least 1, got {n}")
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    return RatingCounts(rng.multinomial(n, p.probs))


def normalize(c: RatingCounts) -> Pmf:
    """Relative frequencies: the empirical model of the counts"""
    total = c.total
    if total < 1:
        raise DomainError("cannot normalize counts with no ratings")
    return Pmf(c.counts / total)


def min_variance_pmf(psi: float, K: int = Config.NUM_CATEGORIES) -> Pmf:
    """Two-point PMF on floor(psi), ceil(psi) with mean psi (point mass for integer psi)"""
    variance_bounds(psi, K)
    probs = np.zeros(K)
    lower = int(np.floor(psi))
    frac = psi - lower
    if frac == 0.0:
        probs[lower - 1] = 1.0
    else:
        probs[lower - 1] = 1.0 - frac
        probs[lower] = frac
    return Pmf(probs)


def max_variance_pmf(psi: float, K: int = Config.NUM_CATEGORIES) -> Pmf:
    """Two-point PMF on the end categories 1 and K with mean psi"""
    variance_bounds(psi, K)
    probs = np.zeros(K)
    upper = (psi - 1.0) / (K - 1.0)
    probs[0] = 1.0 - upper
    probs[-1] = upper
    return Pmf(probs)
