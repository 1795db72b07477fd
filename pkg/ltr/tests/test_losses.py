"""Tests for the surrogate ranking losses."""

import math

import numpy as np
import pytest

from ltr.models.experiment import RankerKind, RankerSpec
from ltr.rankers.losses import (
    LOSSES,
    compute_loss,
    delta_ndcg,
    expected_perturbed_listnet,
    lambda_gradients,
    listmle_target,
    loss_approxndcg,
    loss_lambdarank,
    loss_listmle,
    loss_listnet_top1,
    loss_rank_mse,
    loss_rankcosine,
    loss_ranknet,
    loss_stlistnet,
)
from ltr.rankers.plackett_luce import pl_log_prob

FD_STEP = 1e-5

DETERMINISTIC = {
    "RankMSE": lambda s, y: loss_rank_mse(s, y),
    "RankNet": lambda s, y: loss_ranknet(s, y, 1.0),
    "LambdaRank": lambda s, y: loss_lambdarank(s, y, 1.0),
    "ListNet": lambda s, y: loss_listnet_top1(s, y),
    "ListNet-gains": lambda s, y: loss_listnet_top1(s, y, "gains"),
    "ListMLE": lambda s, y: loss_listmle(s, y),
    "RankCosine": lambda s, y: loss_rankcosine(s, y),
    "ApproxNDCG": lambda s, y: loss_approxndcg(s, y, 10.0),
    "STListNet": lambda s, y: loss_stlistnet(s, y, noise=np.linspace(-0.5, 0.5, s.shape[0])),
}


def _finite_difference(fn, s, y):
    grad = np.empty_like(s)
    for i in range(s.shape[0]):
        e = np.zeros_like(s)
        e[i] = FD_STEP
        grad[i] = (fn(s + e, y)[0] - fn(s - e, y)[0]) / (2 * FD_STEP)
    return grad


class TestHandValues:
    """Test losses against hand-computed values."""

    def test_rank_mse(self):
        """Test RankMSE on small vectors."""
        assert loss_rank_mse(np.zeros(2), np.array([1.0, 0.0]))[0] == 0.5
        loss, _ = loss_rank_mse(np.array([2.0, 1, 0]), np.array([0.0, 1, 2]))
        assert loss == pytest.approx(8 / 3)
        assert loss_rank_mse(np.ones(3), np.ones(3))[0] == 0.0

    def test_ranknet(self):
        """Test RankNet at zero and unit margins."""
        assert loss_ranknet(np.zeros(2), np.array([1.0, 0.0]))[0] == pytest.approx(math.log(2))
        assert loss_ranknet(np.array([1.0, 0.0]), np.array([0.0, 1.0]))[0] == pytest.approx(
            math.log(1 + math.e)
        )
        loss, grad = loss_ranknet(np.array([0.3, -1.0]), np.ones(2))
        assert loss == 0.0
        np.testing.assert_array_equal(grad, 0.0)

    def test_lambdarank_delta(self):
        """Test |delta nDCG| for two documents in the correct order."""
        delta = delta_ndcg(np.array([1.0, 0.0]), np.array([1.0, 0.0]))
        assert delta[0, 1] == pytest.approx(0.3691, abs=1e-4)

    def test_lambdarank_structure(self, rng):
        """Test lambdas sum to zero and vanish on equal labels."""
        for _ in range(20):
            s = rng.standard_normal(8)
            grad = lambda_gradients(s, rng.integers(0, 5, size=8).astype(float))
            assert abs(grad.sum()) < 1e-12
        equal = lambda_gradients(rng.standard_normal(4), np.full(4, 2.0))
        np.testing.assert_array_equal(equal, 0.0)
        np.testing.assert_array_equal(lambda_gradients(rng.standard_normal(4), np.zeros(4)), 0.0)

    def test_lambdarank_pushes_relevant_up(self):
        """Test the relevant document gets a negative (ascending) gradient."""
        grad = lambda_gradients(np.array([0.0, 1.0]), np.array([1.0, 0.0]))
        assert grad[0] < 0 < grad[1]

    def test_listnet(self, rng):
        """Test uniform prediction costs ln 2 and gradients sum to zero."""
        assert loss_listnet_top1(np.zeros(2), np.array([3.0, 0.0]))[0] == pytest.approx(math.log(2))
        _, grad = loss_listnet_top1(rng.standard_normal(6), rng.integers(0, 3, 6).astype(float))
        assert abs(grad.sum()) < 1e-12

    def test_listnet_minimizer(self, rng):
        """Test s = y attains the entropy of the target distribution."""
        y = rng.integers(0, 4, size=5).astype(float)
        p = np.exp(y) / np.exp(y).sum()
        loss, grad = loss_listnet_top1(y, y)
        assert loss == pytest.approx(-np.sum(p * np.log(p)))
        np.testing.assert_allclose(grad, 0.0, atol=1e-12)

    def test_listmle(self):
        """Test equal scores give ln m!."""
        assert loss_listmle(np.zeros(2), np.array([1.0, 0.0]))[0] == pytest.approx(math.log(2))
        assert loss_listmle(np.zeros(3), np.array([2.0, 1.0, 0.0]))[0] == pytest.approx(
            math.log(6)
        )
        assert loss_listmle(np.array([4.2]), np.array([1.0]))[0] == 0.0

    def test_listmle_equals_negative_pl_log_prob(self, rng):
        """Test ListMLE is exactly the negated Plackett-Luce log-likelihood of the target."""
        for _ in range(20):
            s = rng.standard_normal(7)
            y = rng.integers(0, 3, size=7).astype(float)
            assert loss_listmle(s, y)[0] == -pl_log_prob(s, listmle_target(y), 1.0)

    def test_listmle_target_ties(self):
        """Test the default target breaks label ties by index."""
        np.testing.assert_array_equal(listmle_target(np.array([1.0, 2.0, 1.0])), [1, 0, 2])

    def test_rankcosine(self):
        """Test parallel, orthogonal, opposite and zero vectors."""
        y = np.array([2.0, 1.0, 0.0])
        assert loss_rankcosine(3 * y, y)[0] == pytest.approx(0.0, abs=1e-12)
        assert loss_rankcosine(np.array([0.0, 0.0, 1.0]), y)[0] == pytest.approx(0.5)
        assert loss_rankcosine(-y, y)[0] == pytest.approx(1.0)
        loss, grad = loss_rankcosine(np.zeros(3), y)
        assert loss == 0.5
        np.testing.assert_array_equal(grad, 0.0)

    def test_approxndcg(self):
        """Test saturated, tied and single-document cases."""
        assert loss_approxndcg(np.array([0.0]), np.array([1.0]))[0] == pytest.approx(-1.0)
        assert loss_approxndcg(np.array([10.0, -10.0]), np.array([1.0, 0.0]))[0] == pytest.approx(
            -1.0, abs=1e-6
        )
        assert loss_approxndcg(np.zeros(2), np.array([1.0, 0.0]))[0] == pytest.approx(
            -1 / math.log2(2.5), abs=1e-4
        )
        loss, grad = loss_approxndcg(np.ones(3), np.zeros(3))
        assert loss == 0.0
        np.testing.assert_array_equal(grad, 0.0)

    def test_stlistnet_reduces_to_listnet(self, rng):
        """Test zero noise reproduces ListNet exactly."""
        s = rng.standard_normal(5)
        y = rng.integers(0, 3, size=5).astype(float)
        a = loss_stlistnet(s, y, noise=np.zeros(5))
        b = loss_listnet_top1(s, y)
        assert a[0] == b[0]
        np.testing.assert_array_equal(a[1], b[1])

    def test_stlistnet_seeded(self, rng):
        """Test the same seed draws the same noise."""
        s = rng.standard_normal(5)
        y = np.arange(5.0)
        assert loss_stlistnet(s, y, rng=42)[0] == loss_stlistnet(s, y, rng=42)[0]

    def test_stlistnet_monte_carlo(self):
        """Test the mean of seeded single-draw losses approximates the expected loss."""
        s = np.array([0.5, -0.2, 1.0, 0.0])
        y = np.array([2.0, 0.0, 1.0, 0.0])
        gen = np.random.default_rng(0)
        singles = [loss_stlistnet(s, y, rng=gen)[0] for _ in range(20_000)]
        expected = expected_perturbed_listnet(s, y, 100_000, np.random.default_rng(1))
        stderr = np.std(singles) / np.sqrt(len(singles))
        assert abs(np.mean(singles) - expected) < 5 * stderr + 1e-3


class TestGradients:
    """Test analytic gradients against central differences."""

    @pytest.mark.parametrize("name", sorted(DETERMINISTIC))
    def test_finite_differences(self, name, rng):
        """Test 50 random instances per loss."""
        fn = DETERMINISTIC[name]
        for _ in range(50):
            m = int(rng.integers(2, 11))
            s = rng.standard_normal(m)
            y = rng.integers(0, 5, size=m).astype(float)
            _, grad = fn(s, y)
            numeric = _finite_difference(fn, s, y)
            scale = np.maximum(np.maximum(np.abs(grad), np.abs(numeric)), 1e-3)
            assert np.all(np.abs(grad - numeric) / scale < 1e-4), (name, s, y)

    @pytest.mark.parametrize("name", ["RankNet", "LambdaRank", "ListNet", "ListMLE", "ApproxNDCG"])
    def test_shift_invariance(self, name, rng):
        """Test adding a constant to every score leaves the gradient unchanged."""
        fn = DETERMINISTIC[name]
        s = rng.standard_normal(6)
        y = rng.integers(0, 4, size=6).astype(float)
        np.testing.assert_allclose(fn(s, y)[1], fn(s + 3.7, y)[1], atol=1e-10)

    @pytest.mark.parametrize("name", ["RankMSE", "RankCosine"])
    def test_not_shift_invariant(self, name, rng):
        """Test pointwise and cosine losses depend on the absolute scores."""
        fn = DETERMINISTIC[name]
        s = rng.standard_normal(6)
        y = rng.integers(1, 4, size=6).astype(float)
        assert not np.allclose(fn(s, y)[1], fn(s + 3.7, y)[1])

    @pytest.mark.parametrize("name", ["RankNet", "LambdaRank"])
    def test_pair_swap_symmetry(self, name, rng):
        """Test swapping two documents' scores and labels permutes the gradient."""
        fn = DETERMINISTIC[name]
        s = rng.standard_normal(5)
        y = rng.integers(0, 4, size=5).astype(float)
        perm = np.array([1, 0, 2, 3, 4])
        loss, grad = fn(s, y)
        loss_p, grad_p = fn(s[perm], y[perm])
        assert loss_p == pytest.approx(loss)
        np.testing.assert_allclose(grad_p, grad[perm], atol=1e-12)

    def test_ranknet_gradient_sums_to_zero(self, rng):
        """Test pairwise gradients are antisymmetric."""
        _, grad = loss_ranknet(rng.standard_normal(9), rng.integers(0, 5, size=9).astype(float))
        assert abs(grad.sum()) < 1e-12


class TestDispatch:
    """Test loss dispatch by ranker kind."""

    def test_every_kind_registered(self):
        """Test each ranker kind has a loss."""
        assert set(LOSSES) == set(RankerKind)

    @pytest.mark.parametrize("kind", list(RankerKind))
    def test_compute_loss(self, kind, rng):
        """Test compute_loss returns a finite loss and a matching gradient."""
        s = rng.standard_normal(5)
        y = np.array([2.0, 0.0, 1.0, 0.0, 3.0])
        loss, grad = compute_loss(RankerSpec(kind=kind), s, y, rng)
        assert np.isfinite(loss)
        assert grad.shape == s.shape
