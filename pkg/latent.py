"""
Latent-scale distributions and their quantization into rating PMFs.

Normal and logistic live on the real line; logit-logistic and beta on the
unit interval. LatentParams(a, b) means (location, scale) for the first three
and (alpha, beta) shapes for the beta family. The logit-logistic family is the
logistic law with location a and scale b applied to logit(x).
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy import optimize, special

from config import Config
from errors import DomainError
from pmf_core import Pmf

logger = logging.getLogger(__name__)

QUANTILE_TOLERANCE = 1e-12


class Support(Enum):
    REAL_LINE = "real-line"
    UNIT_INTERVAL = "unit-interval"

    @property
    def endpoints(self) -> Tuple[float, float]:
        if self is Support.REAL_LINE:
            return -np.inf, np.inf
        return 0.0, 1.0


class LatentFamily(Enum):
    """Continuous distributions for perceived quality on the latent scale"""
    NORMAL = "normal"
    LOGISTIC = "logistic"
    LOGIT_LOGISTIC = "logit-logistic"
    BETA = "beta"

    @property
    def support(self) -> Support:
        if self in (LatentFamily.NORMAL, LatentFamily.LOGISTIC):
            return Support.REAL_LINE
        return Support.UNIT_INTERVAL


@dataclass(frozen=True)
class LatentParams:
    a: float
    b: float

    def validate(self, family: LatentFamily) -> "LatentParams":
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise DomainError(f"{family.value} parameters must be finite: {self}")
        if self.b <= 0.0:
            raise DomainError(f"{family.value} needs b > 0, got {self.b}")
        if family is LatentFamily.BETA and self.a <= 0.0:
            raise DomainError(f"beta needs a > 0, got {self.a}")
        return self


@dataclass(frozen=True)
class Thresholds:
    taus: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "taus", tuple(float(t) for t in self.taus))

    @property
    def K(self) -> int:
        return len(self.taus) + 1

    def validate(self, family: LatentFamily) -> "Thresholds":
        taus = np.asarray(self.taus)
        if taus.size < 1:
            raise DomainError("at least one threshold is needed")
        if np.any(np.diff(taus) <= 0.0):
            raise DomainError(f"thresholds must be strictly increasing: {self.taus}")
        low, high = family.support.endpoints
        if taus[0] <= low or taus[-1] >= high:
            raise DomainError(f"thresholds {self.taus} must lie inside ({low}, {high})")
        return self


def default_thresholds(family: LatentFamily, K: int = Config.NUM_CATEGORIES) -> Thresholds:
    """Midpoints 1.5..K-0.5 on the real line, k/K on the unit interval"""
    if K < 2:
        raise DomainError(f"K must be at least 2, got {K}")
    if family.support is Support.REAL_LINE:
        return Thresholds(tuple(k + 0.5 for k in range(1, K)))
    return Thresholds(tuple(k / K for k in range(1, K)))


def _standardize(family: LatentFamily, params: LatentParams, x: np.ndarray) -> np.ndarray:
    if family is LatentFamily.LOGIT_LOGISTIC:
        with np.errstate(divide="ignore"):
            x = special.logit(x)
    return (x - params.a) / params.b


def _check_domain(family: LatentFamily, x: np.ndarray):
    if family.support is Support.UNIT_INTERVAL and np.any((x < 0.0) | (x > 1.0)):
        raise DomainError(f"{family.value} is defined on [0, 1], got {x}")


def cdf(family: LatentFamily, params: LatentParams, x):
    """Cumulative distribution function (scalar or array)"""
    params.validate(family)
    x = np.asarray(x, dtype=float)
    _check_domain(family, x)
    if family is LatentFamily.NORMAL:
        result = special.ndtr(_standardize(family, params, x))
    elif family in (LatentFamily.LOGISTIC, LatentFamily.LOGIT_LOGISTIC):
        result = special.expit(_standardize(family, params, x))
    else:
        result = special.betainc(params.a, params.b, x)
    return result if result.ndim else float(result)


def sf(family: LatentFamily, params: LatentParams, x):
    """Survival function 1 - cdf, evaluated without cancellation in the upper tail"""
    params.validate(family)
    x = np.asarray(x, dtype=float)
    _check_domain(family, x)
    if family is LatentFamily.NORMAL:
        result = special.ndtr(-_standardize(family, params, x))
    elif family in (LatentFamily.LOGISTIC, LatentFamily.LOGIT_LOGISTIC):
        result = special.expit(-_standardize(family, params, x))
    else:
        result = special.betainc(params.b, params.a, 1.0 - x)
    return result if result.ndim else float(result)


def pdf(family: LatentFamily, params: LatentParams, x):
    """Probability density function"""
    params.validate(family)
    x = np.asarray(x, dtype=float)
    _check_domain(family, x)
    if family is LatentFamily.NORMAL:
        z = _standardize(family, params, x)
        result = np.exp(-0.5 * z * z) / (params.b * np.sqrt(2.0 * np.pi))
    elif family is LatentFamily.LOGISTIC:
        s = special.expit(_standardize(family, params, x))
        result = s * (1.0 - s) / params.b
    elif family is LatentFamily.LOGIT_LOGISTIC:
        s = special.expit(_standardize(family, params, x))
        with np.errstate(divide="ignore", invalid="ignore"):
            result = np.where((x > 0.0) & (x < 1.0), s * (1.0 - s) / (params.b * x * (1.0 - x)), 0.0)
    else:
        with np.errstate(divide="ignore"):
            log_density = (
                special.xlogy(params.a - 1.0, x)
                + special.xlog1py(params.b - 1.0, -x)
                - special.betaln(params.a, params.b)
            )
        result = np.exp(log_density)
    return result if np.ndim(result) else float(result)


def quantize(family: LatentFamily, params: LatentParams, taus: Optional[Thresholds] = None,
             K: int = Config.NUM_CATEGORIES) -> Pmf:
    """PMF with p_k = F(tau_k) - F(tau_{k-1}), tau_0 and tau_K the support ends"""
    params.validate(family)
    taus = (taus or default_thresholds(family, K)).validate(family)
    cuts = np.asarray(taus.taus)
    lower = cdf(family, params, cuts)
    upper = sf(family, params, cuts)
    lower_edges = np.concatenate(([0.0], lower))
    upper_edges = np.concatenate((upper, [0.0]))
    # bins left of the median telescope the CDF, the rest the survival function
    from_cdf = np.diff(np.concatenate((lower_edges, [1.0])))
    from_sf = -np.diff(np.concatenate(([1.0], upper_edges)))
    use_sf = np.concatenate(([False], lower > 0.5))
    probs = np.clip(np.where(use_sf, from_sf, from_cdf), 0.0, None)
    return Pmf(probs / probs.sum())


def latent_quantile(family: LatentFamily, params: LatentParams, alpha: float) -> float:
    """x with cdf(x) = alpha for 0 < alpha < 1"""
    params.validate(family)
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {alpha}")
    if family is LatentFamily.NORMAL:
        return float(params.a + params.b * special.ndtri(alpha))
    if family is LatentFamily.LOGISTIC:
        return float(params.a + params.b * special.logit(alpha))
    if family is LatentFamily.LOGIT_LOGISTIC:
        return float(special.expit(params.a + params.b * special.logit(alpha)))

    x = float(special.betaincinv(params.a, params.b, alpha))
    if abs(cdf(family, params, x) - alpha) > QUANTILE_TOLERANCE and 0.0 < x < 1.0:
        # polish with a bracketed root search on the monotone CDF
        low, high = max(x - 1e-3, 0.0), min(x + 1e-3, 1.0)
        if (cdf(family, params, low) - alpha) * (cdf(family, params, high) - alpha) > 0.0:
            low, high = 0.0, 1.0
        x = optimize.brentq(lambda t: cdf(family, params, t) - alpha, low, high, xtol=1e-15, rtol=1e-15)
    return float(x)


def beta_mean_precision(params: LatentParams) -> Tuple[float, float]:
    """Beta shapes (alpha, beta) as (mean, precision alpha + beta)"""
    params.validate(LatentFamily.BETA)
    precision = params.a + params.b
    return params.a / precision, precision


def rescale_to_scale(family: LatentFamily, value: float, K: int = Config.NUM_CATEGORIES) -> float:
    """Map unit-interval latent values affinely onto [1, K]; real-line values pass through"""
    if family.support is Support.UNIT_INTERVAL:
        return 1.0 + (K - 1.0) * value
    return value
