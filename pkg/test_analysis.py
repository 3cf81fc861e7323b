#!/usr/bin/env python3
"""
Tests for PCA of PMF sets and latent quality quantiles
Run with pytest, or directly as a script
"""

import logging
import sys

import numpy as np
import pytest

from analysis import DEFAULT_ALPHAS, PcaReport, parse_alphas, pca_explained, quality_quantiles
from errors import DomainError, UnsupportedModelError
from fit import FitResult
from latent import LatentFamily, LatentParams, quantize
from models import ModelKind, pmf_of
from pmf_core import Pmf

# Configure logging
logging.basicConfig(
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    level=logging.INFO
)
logger = logging.getLogger(__name__)


def fitted(kind, theta):
    return FitResult(kind=kind, theta=tuple(theta), pmf=pmf_of(kind, theta), neg_log_likelihood=0.0,
                     converged=True, iterations=0, total=0)


class TestPca:
    """Explained variance of PMF collections"""

    def test_pmfs_on_a_line_have_one_component(self):
        a = np.array([0.1, 0.2, 0.4, 0.2, 0.1])
        b = np.array([0.3, 0.3, 0.2, 0.1, 0.1])
        pmfs = [Pmf((1 - t) * a + t * b) for t in np.linspace(0.0, 1.0, 7)]
        report = pca_explained(pmfs)
        assert report.explained_by(1) == pytest.approx(1.0, abs=1e-9)
        assert report.explained_variance_cumulative[-1] == 1.0

    def test_quantized_normal_family_is_nearly_two_dimensional(self):
        params = [LatentParams(a, b) for a in np.linspace(2.0, 4.0, 11) for b in np.linspace(0.5, 1.5, 11)]
        pmfs = [quantize(LatentFamily.NORMAL, p, K=5) for p in params]
        assert pca_explained(pmfs).explained_by(2) >= 0.95

    def test_identical_pmfs_are_degenerate(self):
        p = Pmf([0.1, 0.2, 0.4, 0.2, 0.1])
        report = pca_explained([p, p, p])
        assert report.degenerate
        assert all(v == 1.0 for v in report.explained_variance_cumulative)

    def test_trace_and_ordering(self):
        rng = np.random.default_rng(4)
        pmfs = [Pmf.from_weights(w) for w in rng.dirichlet(np.ones(5), size=40)]
        report = pca_explained(pmfs)
        covariance = np.cov(np.vstack([p.probs for p in pmfs]), rowvar=False)
        assert sum(report.eigenvalues) == pytest.approx(np.trace(covariance), rel=1e-9)
        assert list(report.eigenvalues) == sorted(report.eigenvalues, reverse=True)
        assert np.all(np.diff(report.explained_variance_cumulative) >= -1e-12)

    def test_order_of_pmfs_does_not_matter(self):
        rng = np.random.default_rng(5)
        pmfs = [Pmf.from_weights(w) for w in rng.dirichlet(np.ones(5), size=25)]
        forward = pca_explained(pmfs)
        backward = pca_explained(pmfs[::-1])
        assert forward.explained_variance_cumulative == pytest.approx(backward.explained_variance_cumulative)

    def test_standardized(self):
        rng = np.random.default_rng(6)
        pmfs = [Pmf.from_weights(w) for w in rng.dirichlet(np.ones(5), size=30)]
        report = pca_explained(pmfs, standardize=True)
        assert report.standardized
        assert report.explained_variance_cumulative[-1] == 1.0

    def test_rows_and_validation(self):
        report = pca_explained([Pmf.uniform(5), Pmf.point_mass(3, 5)])
        rows = report.to_rows()
        assert [row["component"] for row in rows] == [1, 2, 3, 4, 5]
        assert list(rows[0]) == list(PcaReport.REPORT_COLUMNS)
        with pytest.raises(DomainError):
            pca_explained([Pmf.uniform(5)])
        with pytest.raises(DomainError):
            report.explained_by(6)


class TestQuantiles:
    """Latent quantiles of fitted quantized models"""

    def test_normal_median(self):
        (row,) = quality_quantiles(fitted(ModelKind.QUANTIZED_NORMAL, (3.0, 1.0)), [0.5])
        assert row.latent == pytest.approx(3.0)
        assert row.rescaled == pytest.approx(3.0)

    def test_uniform_beta(self):
        (row,) = quality_quantiles(fitted(ModelKind.QUANTIZED_BETA, (1.0, 1.0)), [0.1])
        assert row.latent == pytest.approx(0.1)
        assert row.rescaled == pytest.approx(1.4)

    def test_quantiles_increase_with_alpha(self):
        rows = quality_quantiles(fitted(ModelKind.QUANTIZED_LOGIT_LOGISTIC, (0.4, 0.6)), DEFAULT_ALPHAS)
        latent = [row.latent for row in rows]
        assert latent == sorted(latent)
        assert all(0.0 < value < 1.0 for value in latent)
        assert all(0.5 < row.rescaled < 5.5 for row in rows)

    def test_models_without_latent_scale(self):
        with pytest.raises(UnsupportedModelError):
            quality_quantiles(fitted(ModelKind.MAX_ENTROPY, (3.0, 0.5)), [0.5])
        with pytest.raises(UnsupportedModelError):
            quality_quantiles(fitted(ModelKind.GSD, (3.0, 0.5)), [0.5])

    def test_parse_alphas(self):
        assert parse_alphas("0.05, 0.5,0.95") == [0.05, 0.5, 0.95]
        for text in ("", "0.5,1.0", "0,0.5", "a,b"):
            with pytest.raises(DomainError):
                parse_alphas(text)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
