"""
Secondary analyses: principal components of a set of PMFs and
population quantiles of fitted latent models.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from errors import DomainError, UnsupportedModelError
from fit import FitResult
from latent import LatentParams, latent_quantile, rescale_to_scale
from pmf_core import Pmf

logger = logging.getLogger(__name__)

_DEGENERATE_VARIANCE = 1e-15


@dataclass(frozen=True)
class PcaReport:
    eigenvalues: Tuple[float, ...]
    explained_variance_cumulative: Tuple[float, ...]
    degenerate: bool = False
    standardized: bool = False

    REPORT_COLUMNS = ("component", "eigenvalue", "cumulative_explained")

    def explained_by(self, n_components: int) -> float:
        """Fraction of variance explained by the leading components"""
        if not 1 <= n_components <= len(self.eigenvalues):
            raise DomainError(f"component count {n_components} outside 1..{len(self.eigenvalues)}")
        return self.explained_variance_cumulative[n_components - 1]

    def to_rows(self) -> List[Dict[str, Any]]:
        return [
            {"component": i + 1, "eigenvalue": value, "cumulative_explained": cumulative}
            for i, (value, cumulative) in enumerate(zip(self.eigenvalues, self.explained_variance_cumulative))
        ]


@dataclass(frozen=True)
class QuantileRow:
    alpha: float
    latent: float
    rescaled: float

    REPORT_COLUMNS = ("alpha", "latent", "rescaled")

    def to_row(self) -> Dict[str, Any]:
        return {"alpha": self.alpha, "latent": self.latent, "rescaled": self.rescaled}


def pca_explained(pmfs: Sequence[Pmf], standardize: bool = False) -> PcaReport:
    """
    Eigenvalues of the covariance matrix of the PMFs as K-vectors, largest
    first, with cumulative explained variance. With standardize=True the
    correlation matrix is used; coordinates with zero variance stay zero.
    """
    if len(pmfs) < 2:
        raise DomainError(f"PCA needs at least 2 PMFs, got {len(pmfs)}")
    K = pmfs[0].K
    if any(p.K != K for p in pmfs):
        raise DomainError("PMFs on different scales")

    data = np.vstack([p.probs for p in pmfs])
    covariance = np.cov(data, rowvar=False)
    if standardize:
        sd = np.sqrt(np.diag(covariance))
        sd = np.where(sd > 0.0, sd, 1.0)
        covariance = covariance / np.outer(sd, sd)

    eigenvalues = np.clip(np.linalg.eigh(covariance)[0][::-1], 0.0, None)
    total = float(eigenvalues.sum())
    if total <= _DEGENERATE_VARIANCE:
        logger.warning(f"PCA over {len(pmfs)} PMFs is degenerate: all PMFs are identical")
        return PcaReport(tuple(0.0 for _ in eigenvalues), tuple(1.0 for _ in eigenvalues),
                         degenerate=True, standardized=standardize)

    cumulative = np.minimum(np.cumsum(eigenvalues) / total, 1.0)
    cumulative[-1] = 1.0
    logger.info(f"PCA over {len(pmfs)} PMFs: first two components explain {cumulative[min(1, K - 1)]:.1%}")
    return PcaReport(
        eigenvalues=tuple(float(v) for v in eigenvalues),
        explained_variance_cumulative=tuple(float(v) for v in cumulative),
        standardized=standardize,
    )


def quality_quantiles(fit: FitResult, alphas: Sequence[float], K: Optional[int] = None) -> List[QuantileRow]:
    """Latent quantiles of a fitted quantized model, also mapped onto the rating scale"""
    family = fit.kind.latent_family
    if family is None:
        raise UnsupportedModelError(f"quantiles need a quantized latent model, not {fit.kind.value}")
    K = K if K is not None else fit.pmf.K
    params = LatentParams(fit.theta[0], fit.theta[1])
    rows = []
    for alpha in alphas:
        value = latent_quantile(family, params, float(alpha))
        rows.append(QuantileRow(float(alpha), value, rescale_to_scale(family, value, K)))
    return rows


def parse_alphas(text: str) -> List[float]:
    """Comma-separated quantile levels in (0, 1)"""
    try:
        alphas = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise DomainError(f"quantile levels must be numbers: '{text}'") from None
    if not alphas or any(not 0.0 < a < 1.0 for a in alphas):
        raise DomainError(f"quantile levels must lie in (0, 1): '{text}'")
    return alphas


DEFAULT_ALPHAS = tuple(round(0.1 * i, 1) for i in range(1, 10))
