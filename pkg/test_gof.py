#!/usr/bin/env python3
"""
Tests for the G-test, AIC, dataset summaries and the parametric bootstrap
Run with pytest, or directly as a script
"""

import logging
import math
import sys

import numpy as np
import pytest
from scipy import special

from dataset_loader import Dataset
from errors import DomainError
from fit import FitOptions, mle_fit
from gof import (GofRecord, GofSummary, aic, chi2_cdf, chi2_pvalue, degrees_of_freedom, evaluate_dataset,
                 g_cdf_curve, g_test, parametric_bootstrap, rank_summaries, ratio_below, summarize)
from models import ModelKind, pmf_of
from pmf_core import Pmf, RatingCounts, sample

# Configure logging
logging.basicConfig(
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    level=logging.INFO
)
logger = logging.getLogger(__name__)

FAST = FitOptions(n_starts=2, seed=3)


def record(g, kind=ModelKind.GSD, aic_value=10.0, sid="s"):
    return GofRecord(sid, kind, g, chi2_pvalue(g), aic_value, 24)


class TestGTest:
    """G statistic and chi-squared tail"""

    def test_hand_computed_statistic(self):
        g = g_test(RatingCounts([10, 20, 40, 20, 10]), Pmf.uniform(5))
        assert g == pytest.approx(2 * (10 * math.log(0.5) + 40 * math.log(2) + 10 * math.log(0.5)))
        assert g == pytest.approx(27.726, abs=1e-3)

    def test_observed_proportional_to_model(self):
        assert g_test(RatingCounts([10, 20, 40, 20, 10]), Pmf([0.1, 0.2, 0.4, 0.2, 0.1])) == pytest.approx(0.0,
                                                                                                           abs=1e-9)
        assert g_test(RatingCounts([0, 0, 24, 0, 0]), Pmf.point_mass(3, 5)) == 0.0

    def test_unsupported_rating_gives_infinity(self):
        g = g_test(RatingCounts([1, 0, 23, 0, 0]), Pmf.point_mass(3, 5))
        assert g == math.inf
        assert chi2_pvalue(g) == 0.0

    def test_pvalue_examples(self):
        assert chi2_pvalue(0.0) == 1.0
        assert chi2_pvalue(5.9915) == pytest.approx(0.05, abs=1e-4)

    @pytest.mark.parametrize("g", [0.1, 1.0, 2.5, 7.3, 20.0])
    def test_closed_form_matches_incomplete_gamma(self, g):
        assert chi2_pvalue(g, 2) == pytest.approx(math.exp(-g / 2), abs=1e-12)
        assert chi2_pvalue(g, 2) == pytest.approx(special.gammaincc(1.0, g / 2), abs=1e-12)
        assert chi2_pvalue(g, 3) == pytest.approx(1.0 - chi2_cdf(g, 3), abs=1e-12)

    def test_negative_statistic(self):
        with pytest.raises(DomainError):
            chi2_pvalue(-1.0)

    def test_degrees_of_freedom(self):
        assert degrees_of_freedom(5, 2) == 2
        with pytest.raises(DomainError):
            degrees_of_freedom(5, 4)

    def test_aic(self):
        assert aic(100.0, 2) == 204.0
        assert aic(0.0, 0) == 0.0


class TestSummaries:
    """Dataset-level statistics with bootstrap intervals"""

    def test_identical_records_have_zero_width_intervals(self):
        summary = summarize([record(1.5)] * 30, n_boot=200, seed=1)
        assert summary.mean_g == pytest.approx(1.5)
        assert summary.mean_g_ci == pytest.approx((1.5, 1.5))
        assert summary.aic_ci == pytest.approx((300.0, 300.0))

    def test_no_bootstrap(self):
        summary = summarize([record(1.0), record(3.0)], n_boot=0)
        assert summary.mean_g_ci is None
        assert summary.aic_ci is None
        row = summary.to_row()
        assert list(row) == list(GofSummary.REPORT_COLUMNS)
        assert row["g_lo"] is None

    def test_intervals_contain_the_estimate_and_are_deterministic(self):
        records = [record(g) for g in np.linspace(0.0, 12.0, 40)]
        first = summarize(records, n_boot=300, seed=9)
        assert first.mean_g_ci[0] <= first.mean_g <= first.mean_g_ci[1]
        assert first.aic_ci[0] <= first.aic_total <= first.aic_ci[1]
        assert summarize(records, n_boot=300, seed=9) == first

    def test_ratio_below(self):
        records = [record(g) for g in (0.5, 7.0, 8.0, 1.0)]
        assert ratio_below(records, 0.05) == pytest.approx(0.5)
        assert summarize(records, n_boot=0).ratio_p_lt_05 == pytest.approx(0.5)

    def test_mixed_models_are_rejected(self):
        with pytest.raises(DomainError):
            summarize([record(1.0), record(1.0, kind=ModelKind.MAX_ENTROPY)], n_boot=0)

    def test_ranking_by_mean_g(self):
        worse = summarize([record(4.0, kind=ModelKind.GSD)], n_boot=0)
        better = summarize([record(1.7, kind=ModelKind.QUANTIZED_LOGIT_LOGISTIC)], n_boot=0)
        assert [s.kind for s in rank_summaries([worse, better])] == [ModelKind.QUANTIZED_LOGIT_LOGISTIC,
                                                                     ModelKind.GSD]


class TestGCurve:
    """Empirical CDF of G statistics"""

    def test_single_record(self):
        points = g_cdf_curve([record(1.0)], [0.0, 1.0, 2.0])
        assert [p.cumulative_fraction for p in points] == [0.0, 1.0, 1.0]

    def test_reference_curve(self):
        point = g_cdf_curve([record(1.0)], [2 * math.log(20)])[0]
        assert point.reference == pytest.approx(0.95)

    def test_grid_edge_cases(self):
        assert g_cdf_curve([record(1.0)], []) == []
        with pytest.raises(DomainError):
            g_cdf_curve([record(1.0)], [2.0, 1.0])


class TestDatasetEvaluation:
    """Fitting and testing whole datasets"""

    def test_evaluate_dataset(self):
        dataset = Dataset("tiny", (
            ("a", RatingCounts([1, 4, 10, 6, 3])),
            ("b", RatingCounts([0, 2, 5, 11, 6])),
        ), 5)
        records = evaluate_dataset(dataset, ModelKind.QUANTIZED_NORMAL, FAST)
        assert [r.stimulus_id for r in records] == ["a", "b"]
        assert all(r.g_stat >= 0.0 and 0.0 <= r.p_value <= 1.0 for r in records)
        fit = mle_fit(ModelKind.QUANTIZED_NORMAL, dataset.counts[0], FAST)
        assert records[0].aic_contribution == pytest.approx(aic(fit.neg_log_likelihood, 2))

    def test_null_calibration(self):
        # 2000 replicates of 1000 ratings: 3 binomial sigmas are 0.0146 at level 0.05 and 0.034 at 0.5
        population = pmf_of(ModelKind.QUANTIZED_LOGISTIC, (3.2, 0.7))
        fit = mle_fit(ModelKind.QUANTIZED_LOGISTIC, sample(population, 5000, seed=21), FAST)
        records = parametric_bootstrap(fit, n_ratings=1000, n_samples=2000, seed=4,
                                       options=FitOptions(n_starts=2, seed=11))
        assert len(records) == 2000
        assert abs(ratio_below(records, 0.05) - 0.05) < 0.015
        assert abs(ratio_below(records, 0.5) - 0.5) < 0.034

    def test_bootstrap_is_deterministic(self):
        fit = mle_fit(ModelKind.GSD, RatingCounts([2, 5, 9, 6, 2]), FAST)
        first = parametric_bootstrap(fit, 30, 5, seed=8, options=FAST)
        second = parametric_bootstrap(fit, 30, 5, seed=8, options=FAST)
        assert [r.g_stat for r in first] == [r.g_stat for r in second]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
