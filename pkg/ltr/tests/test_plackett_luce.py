"""Tests for Plackett-Luce probabilities and Gumbel-max sampling."""

import math
from collections import Counter

import numpy as np
import pytest
from scipy.stats import chisquare

from ltr.errors import RankingError
from ltr.rankers.plackett_luce import (
    enumerate_topk_rankings,
    pl_log_prob,
    pl_log_prob_and_grad,
    sample_ranking,
    topk_distribution,
)

SAMPLES = 200_000


def _frequencies(scores, k, rng, temperature=1.0, n=SAMPLES):
    counts = Counter(
        tuple(int(i) for i in sample_ranking(scores, k, rng, temperature)) for _ in range(n)
    )
    rankings = enumerate_topk_rankings(len(scores), k)
    return {ranking: counts.get(ranking, 0) / n for ranking in rankings}


class TestLogProb:
    """Test Plackett-Luce log-probabilities."""

    def test_single_document(self):
        """Test a one-document ranking has probability 1."""
        assert pl_log_prob(np.array([3.0]), [0]) == 0.0

    def test_uniform_full_ranking(self):
        """Test equal scores give ln(1/6) for three documents."""
        assert pl_log_prob(np.zeros(3), [2, 0, 1]) == pytest.approx(-math.log(6))

    def test_shift_invariance(self, rng):
        """Test adding a constant to every score changes nothing."""
        s = rng.standard_normal(5)
        assert pl_log_prob(s + 12.5, [3, 1], 0.5) == pytest.approx(pl_log_prob(s, [3, 1], 0.5))

    @pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
    def test_topk_probabilities_sum_to_one(self, m, rng):
        """Test the distribution over all top-k rankings is normalized."""
        s = rng.standard_normal(m) * 2
        for k in range(1, m + 1):
            total = sum(topk_distribution(s, k, 0.7).values())
            assert abs(total - 1.0) < 1e-9

    def test_unplaced_documents_stay_in_denominator(self):
        """Test a top-1 ranking is the softmax over all documents."""
        s = np.array([1.0, 2.0, 0.5])
        expected = math.exp(2.0) / sum(math.exp(v) for v in s)
        assert math.exp(pl_log_prob(s, [1])) == pytest.approx(expected)

    def test_duplicate_index(self):
        """Test rankings with repeated documents are rejected."""
        with pytest.raises(RankingError, match="duplicate"):
            pl_log_prob(np.zeros(3), [1, 1])

    def test_out_of_range(self):
        """Test out-of-range indices are rejected."""
        with pytest.raises(RankingError):
            pl_log_prob(np.zeros(3), [3])

    def test_gradient_finite_differences(self, rng):
        """Test the score gradient against central differences."""
        h = 1e-6
        for _ in range(30):
            m = int(rng.integers(2, 8))
            k = int(rng.integers(1, m + 1))
            s = rng.standard_normal(m)
            ranking = rng.permutation(m)[:k]
            t = float(rng.uniform(0.3, 2.0))
            value, grad = pl_log_prob_and_grad(s, ranking, t)
            assert value == pytest.approx(pl_log_prob(s, ranking, t))
            numeric = np.array(
                [
                    (pl_log_prob(s + h * e, ranking, t) - pl_log_prob(s - h * e, ranking, t))
                    / (2 * h)
                    for e in np.eye(m)
                ]
            )
            np.testing.assert_allclose(grad, numeric, atol=1e-6)


class TestSampling:
    """Test Gumbel-max sampling."""

    def test_single_document(self, rng):
        """Test m = 1 always returns that document."""
        np.testing.assert_array_equal(sample_ranking(np.array([0.3]), 1, rng), [0])

    def test_invalid_k(self, rng):
        """Test k outside [1, m] is rejected."""
        with pytest.raises(RankingError):
            sample_ranking(np.zeros(3), 4, rng)
        with pytest.raises(RankingError):
            sample_ranking(np.zeros(3), 0, rng)

    def test_uniform_orders(self):
        """Test equal scores give each of the six orders about 1/6 of the time."""
        freqs = _frequencies(np.zeros(3), 3, np.random.default_rng(2024))
        observed = np.array(list(freqs.values())) * SAMPLES
        assert chisquare(observed).pvalue > 0.001

    def test_matches_exact_distribution(self):
        """Test empirical full-ranking frequencies match the exact probabilities at m = 4."""
        scores = np.array([0.8, -0.3, 0.1, 1.2])
        exact = topk_distribution(scores, 4)
        freqs = _frequencies(scores, 4, np.random.default_rng(7))
        tv = 0.5 * sum(abs(freqs[r] - exact[r]) for r in exact)
        assert tv < 0.01
        observed = np.array([freqs[r] * SAMPLES for r in exact])
        expected = np.array([exact[r] * SAMPLES for r in exact])
        assert chisquare(observed, expected * observed.sum() / expected.sum()).pvalue > 0.001

    def test_topk_matches_exact_distribution(self):
        """Test top-2 prefixes follow the top-2 Plackett-Luce probabilities."""
        scores = np.array([0.5, 0.0, -0.5, 1.0, 0.2])
        exact = topk_distribution(scores, 2, 0.5)
        freqs = _frequencies(scores, 2, np.random.default_rng(3), temperature=0.5, n=100_000)
        assert 0.5 * sum(abs(freqs[r] - exact[r]) for r in exact) < 0.01

    def test_low_temperature_concentrates(self):
        """Test T = 0.01 with unit gaps almost always returns the score order."""
        scores = np.array([0.0, 3.0, 1.0, 2.0])
        argsort_top = (1, 3)
        assert topk_distribution(scores, 2, 0.01)[argsort_top] > 0.99
        freqs = _frequencies(scores, 2, np.random.default_rng(0), temperature=0.01, n=2_000)
        assert freqs[argsort_top] > 0.99

    def test_seeded(self):
        """Test the same seed draws the same ranking."""
        scores = np.linspace(0, 1, 6)
        np.testing.assert_array_equal(sample_ranking(scores, 4, 11), sample_ranking(scores, 4, 11))
