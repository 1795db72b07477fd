import numpy as np
import pytest

from ltr.data.synthetic import make_synthetic_dataset, quantile_grades
from ltr.errors import DatasetError


class TestSynthetic:
    """Test the synthetic LETOR generator."""

    def test_shape(self):
        """Test query, document and feature counts."""
        synth = make_synthetic_dataset(num_queries=5, docs_per_query=10, dim=4, seed=0)
        ds = synth.dataset
        assert len(ds) == 5
        assert all(g.features.shape == (10, 4) for g in ds)
        assert ds.label_max == 4.0
        assert [g.qid for g in ds] == ["1", "2", "3", "4", "5"]

    def test_grade_counts_exact(self):
        """Test every grade appears equally often per query."""
        synth = make_synthetic_dataset(num_queries=3, docs_per_query=30, dim=5, seed=1)
        for g in synth.dataset:
            _, counts = np.unique(g.labels, return_counts=True)
            assert counts.tolist() == [6] * 5

    def test_quantile_grades(self):
        """Test grades follow the ascending order of values."""
        grades = quantile_grades(np.array([0.3, -1.0, 2.0, 0.0]), 2)
        np.testing.assert_array_equal(grades, [1, 0, 1, 0])

    def test_deterministic(self):
        """Test the same seed gives the same data."""
        a = make_synthetic_dataset(num_queries=2, docs_per_query=5, dim=3, seed=4)
        b = make_synthetic_dataset(num_queries=2, docs_per_query=5, dim=3, seed=4)
        np.testing.assert_array_equal(a.dataset.groups[1].features, b.dataset.groups[1].features)
        np.testing.assert_array_equal(a.weights, b.weights)

    def test_noise_free_oracle_is_perfect(self):
        """Test the oracle reaches nDCG 1 without label noise."""
        synth = make_synthetic_dataset(num_queries=4, docs_per_query=20, dim=6, noise=0.0)
        report = synth.oracle_report(synth.dataset.groups, [1, 5, 10])
        for cutoff in (1, 5, 10):
            assert report.mean("nDCG", cutoff) == pytest.approx(1.0)

    def test_oracle_ranks_by_generating_utility(self):
        """Test the oracle sorts by the noisy utility the labels were bucketed from."""
        synth = make_synthetic_dataset(num_queries=5, docs_per_query=20, dim=6, noise=1.0)
        group = synth.dataset.groups[0]
        clean = group.features @ synth.weights
        assert not np.allclose(synth.utilities[group.qid], clean)
        np.testing.assert_array_equal(quantile_grades(synth.utilities[group.qid], 5), group.labels)
        report = synth.oracle_report(synth.dataset.groups, [1, 5, 10], ["nDCG", "P"])
        for cutoff in (1, 5, 10):
            assert report.mean("nDCG", cutoff) == pytest.approx(1.0)

    def test_invalid_sizes(self):
        """Test non-positive sizes are rejected."""
        with pytest.raises(DatasetError):
            make_synthetic_dataset(num_queries=0)
