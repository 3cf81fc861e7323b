#!/usr/bin/env python3
"""
Tests for PMFs, rating counts, moments and distances on the rating scale
Run with pytest, or directly as a script
"""

import logging
import math
import sys

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy.optimize import linprog

from errors import DomainError
from pmf_core import (Metric, Pmf, RatingCounts, cross_entropy, distance, entropy, max_variance_pmf, mean,
                      min_variance_pmf, moments, normalize, parse_metric, sample, variance, variance_bounds)

# Configure logging
logging.basicConfig(
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    level=logging.INFO
)
logger = logging.getLogger(__name__)

weights = st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=5, max_size=5).filter(lambda w: sum(w) > 1e-3)
pmfs = weights.map(Pmf.from_weights)

UNIFORM = Pmf.uniform(5)

# PMFs with an explicit support: every listed category carries at least 1% of the mass
supported_pmfs = st.tuples(
    st.lists(st.booleans(), min_size=5, max_size=5).filter(any),
    st.lists(st.floats(min_value=0.05, max_value=1.0), min_size=5, max_size=5),
).map(lambda t: Pmf.from_weights(np.array(t[0], dtype=float) * np.array(t[1])))


def transport_cost(p, q):
    """Earth mover cost on 1..K with ground distance |i - j|, solved as a linear program"""
    K = p.K
    cost = np.abs(np.subtract.outer(np.arange(K), np.arange(K))).ravel()
    rows = np.kron(np.eye(K), np.ones(K))
    cols = np.kron(np.ones(K), np.eye(K))
    result = linprog(cost, A_eq=np.vstack((rows, cols)), b_eq=np.concatenate((p.probs, q.probs)),
                     bounds=(0, None), method="highs")
    assert result.status == 0
    return result.fun


def largest_cdf_gap(p, q):
    gap, p_cum, q_cum = 0.0, 0.0, 0.0
    for a, b in zip(p.probs, q.probs):
        p_cum, q_cum = p_cum + a, q_cum + b
        gap = max(gap, abs(p_cum - q_cum))
    return gap


class TestPmf:
    """Construction and validation of PMFs and counts"""

    def test_rejects_negative_entries(self):
        with pytest.raises(DomainError):
            Pmf([0.5, -0.1, 0.6, 0.0, 0.0])

    def test_rejects_bad_sum(self):
        with pytest.raises(DomainError):
            Pmf([0.2, 0.2, 0.2, 0.2, 0.1])

    def test_probabilities_are_read_only(self):
        with pytest.raises(ValueError):
            UNIFORM.probs[0] = 1.0

    def test_point_mass_and_equality(self):
        assert Pmf.point_mass(3, 5) == Pmf([0, 0, 1, 0, 0])
        assert Pmf.point_mass(3, 5) != UNIFORM

    def test_counts_must_be_non_negative_integers(self):
        with pytest.raises(DomainError):
            RatingCounts([1, -1, 0, 0, 0])
        with pytest.raises(DomainError):
            RatingCounts([1.5, 0, 0, 0, 0])
        assert RatingCounts([2, 0, 3, 0, 1]).total == 6


class TestMoments:
    """Mean, variance bounds and rho"""

    @pytest.mark.parametrize("probs", [
        (0, 0, 1, 0, 0),
        (0.5, 0, 0, 0, 0.5),
        (0.1, 0.2, 0.4, 0.2, 0.1),
    ])
    def test_symmetric_pmfs_have_mean_three(self, probs):
        assert mean(Pmf(probs)) == pytest.approx(3.0, abs=1e-12)

    def test_variance_bounds(self):
        assert variance_bounds(3.0, 5) == pytest.approx((0.0, 4.0))
        assert variance_bounds(1.0, 5) == pytest.approx((0.0, 0.0))
        assert variance_bounds(3.5, 5) == pytest.approx((0.25, 3.75))

    def test_variance_bounds_outside_scale(self):
        with pytest.raises(DomainError):
            variance_bounds(5.5, 5)
        with pytest.raises(DomainError):
            variance_bounds(0.9, 5)

    def test_boundary_moments(self):
        m = moments(Pmf([0, 0, 1, 0, 0]))
        assert (m.psi, m.v, m.rho) == pytest.approx((3.0, 0.0, 1.0))
        m = moments(Pmf([0.5, 0, 0, 0, 0.5]))
        assert (m.psi, m.v, m.rho) == pytest.approx((3.0, 4.0, 0.0))

    def test_uniform_moments(self):
        m = moments(UNIFORM)
        assert (m.psi, m.v, m.rho) == pytest.approx((3.0, 2.0, 0.5))

    def test_rho_undefined_at_scale_ends(self):
        assert moments(Pmf.point_mass(1, 5)).rho is None
        assert not moments(Pmf.point_mass(5, 5)).rho_defined

    def test_boundary_pmfs_reach_the_variance_bounds(self):
        v_min, v_max = variance_bounds(2.3, 5)
        assert variance(min_variance_pmf(2.3, 5)) == pytest.approx(v_min, abs=1e-12)
        assert variance(max_variance_pmf(2.3, 5)) == pytest.approx(v_max, abs=1e-12)
        assert max_variance_pmf(2.0, 5) == Pmf([0.75, 0, 0, 0, 0.25])

    @given(pmfs)
    def test_variance_within_bounds(self, p):
        m = moments(p)
        assert m.v_min - 1e-9 <= m.v <= m.v_max + 1e-9
        if m.rho is not None:
            assert 0.0 <= m.rho <= 1.0

    @given(supported_pmfs)
    def test_rho_one_exactly_on_neighbouring_categories(self, p):
        m = moments(p)
        assume(m.rho is not None)
        support = {k for k in range(1, 6) if p.probs[k - 1] > 0.0}
        neighbours = {math.floor(m.psi), math.ceil(m.psi)}
        assert (m.rho > 1.0 - 1e-9) == (support <= neighbours)

    @given(supported_pmfs)
    def test_rho_zero_exactly_on_scale_ends(self, p):
        m = moments(p)
        assume(m.rho is not None)
        support = {k for k in range(1, 6) if p.probs[k - 1] > 0.0}
        assert (m.rho < 1e-9) == (support <= {1, 5})


class TestEntropy:
    """Entropy and cross-entropy in nats"""

    def test_examples(self):
        assert entropy(Pmf.point_mass(2, 5)) == 0.0
        assert entropy(UNIFORM) == pytest.approx(math.log(5))
        assert entropy(Pmf([0.5, 0.5, 0, 0, 0])) == pytest.approx(math.log(2))

    def test_cross_entropy_with_itself_is_entropy(self):
        p = Pmf([0.1, 0.2, 0.4, 0.2, 0.1])
        assert cross_entropy(p, p) == pytest.approx(entropy(p))

    def test_cross_entropy_unsupported_mass(self):
        assert cross_entropy(UNIFORM, Pmf.point_mass(3, 5)) == math.inf
        assert math.isfinite(cross_entropy(UNIFORM, Pmf.point_mass(3, 5), floor=1e-300))

    @given(pmfs, pmfs)
    def test_gibbs_inequality(self, p, q):
        assert cross_entropy(p, q) >= entropy(p) - 1e-9


class TestDistance:
    """Distances between PMFs"""

    @given(pmfs, st.sampled_from(list(Metric)))
    def test_identity(self, p, metric):
        assert distance(p, p, metric) == pytest.approx(0.0, abs=1e-7)

    @given(pmfs, pmfs, st.sampled_from(list(Metric)))
    def test_symmetry_and_non_negativity(self, p, q, metric):
        d = distance(p, q, metric)
        assert d >= 0.0
        assert d == pytest.approx(distance(q, p, metric), rel=1e-9, abs=1e-12)

    @settings(max_examples=40)
    @given(pmfs, pmfs)
    def test_wasserstein_is_the_optimal_transport_cost(self, p, q):
        assert distance(p, q, Metric.WASSERSTEIN) == pytest.approx(transport_cost(p, q), abs=1e-7)

    @given(pmfs, pmfs)
    def test_ks_is_the_largest_cdf_gap(self, p, q):
        assert distance(p, q, Metric.KOLMOGOROV_SMIRNOV) == pytest.approx(largest_cdf_gap(p, q), abs=1e-12)

    def test_end_point_masses(self):
        p, q = Pmf.point_mass(1, 5), Pmf.point_mass(5, 5)
        assert distance(p, q, Metric.WASSERSTEIN) == pytest.approx(4.0)
        assert distance(p, q, Metric.LINF) == pytest.approx(1.0)
        assert distance(p, q, Metric.KOLMOGOROV_SMIRNOV) == pytest.approx(1.0)
        assert distance(p, q, Metric.EUCLIDEAN) == pytest.approx(math.sqrt(2.0))

    def test_bhattacharyya_disjoint_support_is_infinite(self):
        assert distance(Pmf.point_mass(1, 5), Pmf.point_mass(5, 5), Metric.BHATTACHARYYA) == math.inf

    def test_parse_metric(self):
        assert parse_metric("KS") is Metric.KOLMOGOROV_SMIRNOV
        with pytest.raises(DomainError):
            parse_metric("manhattan")


class TestSampling:
    """Multinomial draws and normalization"""

    def test_point_mass_sample(self):
        assert sample(Pmf.point_mass(3, 5), 10, seed=1) == RatingCounts([0, 0, 10, 0, 0])

    def test_fixed_seed_is_deterministic(self):
        p = Pmf([0.1, 0.2, 0.4, 0.2, 0.1])
        assert sample(p, 500, seed=42) == sample(p, 500, seed=42)

    def test_law_of_large_numbers(self):
        frequencies = normalize(sample(UNIFORM, 1_000_000, seed=7)).probs
        assert np.all(np.abs(frequencies - 0.2) < 0.005)

    def test_error_shrinks_with_sample_size(self):
        p = Pmf([0.05, 0.15, 0.4, 0.3, 0.1])
        errors = {
            n: np.mean([distance(normalize(sample(p, n, seed=s)), p, Metric.LINF) for s in range(100)])
            for n in (100, 10_000)
        }
        # O(n^-1/2): a 100x larger sample gives roughly a 10x smaller error
        assert errors[10_000] < errors[100] / 5

    def test_normalize(self):
        assert normalize(RatingCounts([2, 0, 0, 0, 2])) == Pmf([0.5, 0, 0, 0, 0.5])
        assert normalize(RatingCounts([10, 20, 40, 20, 10])).probs == pytest.approx([0.1, 0.2, 0.4, 0.2, 0.1])
        with pytest.raises(DomainError):
            normalize(RatingCounts([0, 0, 0, 0, 0]))

    @settings(max_examples=50)
    @given(pmfs, st.integers(min_value=1, max_value=200), st.integers(min_value=0, max_value=2 ** 32))
    def test_sample_total(self, p, n, seed):
        assert sample(p, n, seed).total == n


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
