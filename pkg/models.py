"""
The model zoo: every model maps its parameter vector to a rating PMF and
declares the box its parameters live in.

Quantized models take latent parameters (a, b); the maximum entropy model and
the GSD take (psi, rho); the empirical model takes the probability vector.
Model kinds are addressed by stable names ("normal", "logistic",
"logit-logistic", "beta", "maxentropy", "gsd", "empirical").
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import special, stats

from config import Config
from errors import DomainError, UnsupportedModelError
from latent import LatentFamily, LatentParams, quantize
from maxent import maxent_pmf
from pmf_core import Pmf, min_variance_pmf, moments, variance_bounds

logger = logging.getLogger(__name__)

ModelParams = Tuple[float, ...]

SCALE_MIN = 1e-6
SCALE_MAX = 1e3
SHAPE_MIN = 1e-6
SHAPE_MAX = 1e6
_BOUND_SLACK = 1e-12


class ModelKind(Enum):
    """Model families with their stable names"""
    QUANTIZED_NORMAL = "normal"
    QUANTIZED_LOGISTIC = "logistic"
    QUANTIZED_LOGIT_LOGISTIC = "logit-logistic"
    QUANTIZED_BETA = "beta"
    MAX_ENTROPY = "maxentropy"
    GSD = "gsd"
    EMPIRICAL = "empirical"

    @property
    def latent_family(self) -> Optional[LatentFamily]:
        return _LATENT_FAMILIES.get(self)

    @property
    def is_quantized(self) -> bool:
        return self in _LATENT_FAMILIES

    @property
    def label(self) -> str:
        """Row label used in reports"""
        return "GSD" if self is ModelKind.GSD else self.value


_LATENT_FAMILIES = {
    ModelKind.QUANTIZED_NORMAL: LatentFamily.NORMAL,
    ModelKind.QUANTIZED_LOGISTIC: LatentFamily.LOGISTIC,
    ModelKind.QUANTIZED_LOGIT_LOGISTIC: LatentFamily.LOGIT_LOGISTIC,
    ModelKind.QUANTIZED_BETA: LatentFamily.BETA,
}

PARAMETRIC_KINDS = [kind for kind in ModelKind if kind is not ModelKind.EMPIRICAL]


def parse_kind(name: str) -> ModelKind:
    """Model kind for a stable name"""
    try:
        return ModelKind(name.strip().lower())
    except ValueError:
        valid = ", ".join(k.value for k in ModelKind)
        raise UnsupportedModelError(f"unknown model '{name}'; valid models: {valid}") from None


def parse_kinds(names: str) -> List[ModelKind]:
    """Comma-separated model names, in the given order"""
    kinds = [parse_kind(name) for name in names.split(",") if name.strip()]
    if not kinds:
        raise UnsupportedModelError("no model names given")
    return kinds


@dataclass(frozen=True)
class ParamSpec:
    """One parameter: its name, box and whether searches run on a log scale"""
    name: str
    low: float
    high: float
    log_scale: bool = False
    start_low: Optional[float] = None
    start_high: Optional[float] = None

    @property
    def start_box(self) -> Tuple[float, float]:
        low = self.low if self.start_low is None else self.start_low
        high = self.high if self.start_high is None else self.start_high
        return low, high


class RatingModel(ABC):
    """Abstract base class for rating distribution models"""

    kind: ModelKind

    def __init__(self, K: int = Config.NUM_CATEGORIES):
        if K < 2:
            raise DomainError(f"K must be at least 2, got {K}")
        self.K = K

    @abstractmethod
    def param_specs(self) -> List[ParamSpec]:
        """Parameter names and boxes"""

    @abstractmethod
    def _pmf(self, theta: np.ndarray) -> Pmf:
        """PMF for parameters already checked against the box"""

    @abstractmethod
    def initial_guess(self, p: Pmf) -> ModelParams:
        """Moment-based starting parameters for fitting to p"""

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def n_params(self) -> int:
        return len(self.param_specs())

    def param_names(self) -> List[str]:
        return [spec.name for spec in self.param_specs()]

    def param_bounds(self) -> List[Tuple[float, float]]:
        return [(spec.low, spec.high) for spec in self.param_specs()]

    def check_params(self, theta: Sequence[float]) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        specs = self.param_specs()
        if theta.shape != (len(specs),):
            raise DomainError(f"{self.name} expects {len(specs)} parameters, got {theta.tolist()}")
        for value, spec in zip(theta, specs):
            if not np.isfinite(value) or not spec.low - _BOUND_SLACK <= value <= spec.high + _BOUND_SLACK:
                raise DomainError(f"{self.name} parameter {spec.name}={value} outside [{spec.low}, {spec.high}]")
        return theta

    def pmf(self, theta: Sequence[float]) -> Pmf:
        return self._pmf(self.check_params(theta))

    def clip_to_bounds(self, theta: Sequence[float]) -> ModelParams:
        return tuple(float(np.clip(value, spec.low, spec.high)) for value, spec in zip(theta, self.param_specs()))


class QuantizedModel(RatingModel):
    """Latent distribution quantized at fixed default thresholds"""

    def __init__(self, kind: ModelKind, K: int = Config.NUM_CATEGORIES):
        super().__init__(K)
        if not kind.is_quantized:
            raise UnsupportedModelError(f"{kind.value} is not a quantized latent model")
        self.kind = kind
        self.family = kind.latent_family

    def param_specs(self) -> List[ParamSpec]:
        K = self.K
        if self.family is LatentFamily.BETA:
            return [
                ParamSpec("alpha", SHAPE_MIN, SHAPE_MAX, log_scale=True, start_low=0.5, start_high=50.0),
                ParamSpec("beta", SHAPE_MIN, SHAPE_MAX, log_scale=True, start_low=0.5, start_high=50.0),
            ]
        if self.family is LatentFamily.LOGIT_LOGISTIC:
            return [
                ParamSpec("location", -50.0, 50.0, start_low=-3.0, start_high=3.0),
                ParamSpec("scale", SCALE_MIN, SCALE_MAX, log_scale=True, start_low=0.1, start_high=3.0),
            ]
        return [
            ParamSpec("location", -2.0 * K, 3.0 * K, start_low=1.0, start_high=float(K)),
            ParamSpec("scale", SCALE_MIN, SCALE_MAX, log_scale=True, start_low=0.1, start_high=float(K)),
        ]

    def _pmf(self, theta: np.ndarray) -> Pmf:
        return quantize(self.family, LatentParams(float(theta[0]), float(theta[1])), K=self.K)

    def latent_params(self, theta: Sequence[float]) -> LatentParams:
        theta = self.check_params(theta)
        return LatentParams(float(theta[0]), float(theta[1]))

    def initial_guess(self, p: Pmf) -> ModelParams:
        m = moments(p)
        sd = max(np.sqrt(m.v), 0.1)
        if self.family is LatentFamily.NORMAL:
            guess = (m.psi, sd)
        elif self.family is LatentFamily.LOGISTIC:
            guess = (m.psi, sd * np.sqrt(3.0) / np.pi)
        else:
            # bin k covers ((k-1)/K, k/K) on the unit interval
            unit_mean = float(np.clip((m.psi - 0.5) / self.K, 0.05, 0.95))
            unit_var = max(m.v / self.K ** 2 + 1.0 / (12.0 * self.K ** 2), 1e-4)
            if self.family is LatentFamily.BETA:
                precision = max(unit_mean * (1.0 - unit_mean) / unit_var - 1.0, 0.1)
                guess = (unit_mean * precision, (1.0 - unit_mean) * precision)
            else:
                spread = np.sqrt(unit_var) / (unit_mean * (1.0 - unit_mean))
                guess = (float(special.logit(unit_mean)), max(spread * np.sqrt(3.0) / np.pi, 0.05))
        return self.clip_to_bounds(guess)


class _PsiRhoModel(RatingModel):
    """Models parametrized directly by mean and complementary normalized variance"""

    def param_specs(self) -> List[ParamSpec]:
        return [ParamSpec("psi", 1.0, float(self.K)), ParamSpec("rho", 0.0, 1.0)]

    def initial_guess(self, p: Pmf) -> ModelParams:
        m = moments(p)
        rho = 0.5 if m.rho is None else m.rho
        return self.clip_to_bounds((m.psi, rho))

    def _clamped(self, theta: np.ndarray) -> Tuple[float, float]:
        psi = float(np.clip(theta[0], 1.0, self.K))
        rho = float(np.clip(theta[1], 0.0, 1.0))
        return psi, rho


class MaxEntropyModel(_PsiRhoModel):
    """Maximum entropy PMF for (psi, rho)"""

    kind = ModelKind.MAX_ENTROPY

    def _pmf(self, theta: np.ndarray) -> Pmf:
        psi, rho = self._clamped(theta)
        return maxent_pmf(psi, rho, self.K).pmf


class GsdModel(_PsiRhoModel):
    """Generalized score distribution for (psi, rho)"""

    kind = ModelKind.GSD

    def _pmf(self, theta: np.ndarray) -> Pmf:
        return gsd_pmf(*self._clamped(theta), K=self.K)


class EmpiricalModel(RatingModel):
    """Relative frequencies; K-1 free simplex coordinates"""

    kind = ModelKind.EMPIRICAL

    def param_specs(self) -> List[ParamSpec]:
        return [ParamSpec(f"p{k}", 0.0, 1.0) for k in range(1, self.K)]

    def check_params(self, theta: Sequence[float]) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape == (self.K,):
            return theta
        theta = super().check_params(theta)
        return np.append(theta, 1.0 - theta.sum())

    def _pmf(self, theta: np.ndarray) -> Pmf:
        return Pmf(theta)

    def initial_guess(self, p: Pmf) -> ModelParams:
        return tuple(float(x) for x in p.probs[:-1])


def _beta_binomial_probs(trials: int, p: float, phi: float) -> np.ndarray:
    """Beta-binomial with mean trials*p and intra-class correlation phi in [0, 1]"""
    if phi <= 0.0:
        return stats.binom.pmf(np.arange(trials + 1), trials, p)
    if phi >= 1.0:
        probs = np.zeros(trials + 1)
        probs[0], probs[-1] = 1.0 - p, p
        return probs
    # prod_{i<k}(alpha + i) with alpha = p (1/phi - 1), every factor scaled by phi
    steps = phi * np.arange(trials)
    up = np.concatenate(([1.0], np.cumprod(p * (1.0 - phi) + steps)))
    down = np.concatenate(([1.0], np.cumprod((1.0 - p) * (1.0 - phi) + steps)))
    norm = np.prod((1.0 - phi) + steps)
    ks = np.arange(trials + 1)
    return special.comb(trials, ks) * up[ks] * down[trials - ks] / norm


def gsd_pmf(psi: float, rho: float, K: int = Config.NUM_CATEGORIES) -> Pmf:
    """
    Generalized score distribution with mean psi and complementary normalized
    variance rho.

    The shifted binomial Bin(K-1, (psi-1)/(K-1)) + 1 has rho equal to
    C(psi) = (v_max - v_bin) / (v_max - v_min). For rho >= C(psi) the PMF mixes
    that binomial with the minimal-variance two-point distribution; for
    rho < C(psi) it is a shifted beta-binomial whose intra-class correlation
    grows linearly from 0 at C(psi) to 1 at rho = 0.
    """
    if not 0.0 <= rho <= 1.0:
        raise DomainError(f"rho must lie in [0, 1], got {rho}")
    v_min, v_max = variance_bounds(psi, K)
    if v_max - v_min <= 1e-12:
        return min_variance_pmf(psi, K)

    trials = K - 1
    p = (psi - 1.0) / trials
    v_bin = trials * p * (1.0 - p)
    switch = (v_max - v_bin) / (v_max - v_min)

    if rho >= switch:
        weight = 1.0 if switch >= 1.0 else (rho - switch) / (1.0 - switch)
        binomial = stats.binom.pmf(np.arange(K), trials, p)
        probs = weight * min_variance_pmf(psi, K).probs + (1.0 - weight) * binomial
    else:
        phi = (v_max - v_bin - rho * (v_max - v_min)) / (v_bin * (trials - 1))
        probs = _beta_binomial_probs(trials, p, float(np.clip(phi, 0.0, 1.0)))
    probs = np.clip(probs, 0.0, None)
    return Pmf(probs / probs.sum())


class ModelFactory:
    """Factory for creating rating models by kind"""

    @staticmethod
    def create(kind: ModelKind, K: int = Config.NUM_CATEGORIES) -> RatingModel:
        """Create and return the model for the given kind"""
        if kind.is_quantized:
            return QuantizedModel(kind, K)
        elif kind is ModelKind.MAX_ENTROPY:
            return MaxEntropyModel(K)
        elif kind is ModelKind.GSD:
            return GsdModel(K)
        elif kind is ModelKind.EMPIRICAL:
            return EmpiricalModel(K)
        else:
            raise UnsupportedModelError(f"Unsupported model kind: {kind}")


def pmf_of(kind: ModelKind, params: Sequence[float], K: int = Config.NUM_CATEGORIES) -> Pmf:
    """PMF of a model instance"""
    return ModelFactory.create(kind, K).pmf(params)


def param_bounds(kind: ModelKind, K: int = Config.NUM_CATEGORIES) -> List[Tuple[float, float]]:
    """Box constraints per parameter"""
    return ModelFactory.create(kind, K).param_bounds()


def param_names(kind: ModelKind, K: int = Config.NUM_CATEGORIES) -> List[str]:
    return ModelFactory.create(kind, K).param_names()


def n_params(kind: ModelKind, K: int = Config.NUM_CATEGORIES) -> int:
    return ModelFactory.create(kind, K).n_params


def initial_guess(kind: ModelKind, p: Pmf) -> ModelParams:
    return ModelFactory.create(kind, p.K).initial_guess(p)
