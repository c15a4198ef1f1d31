"""Alternative unsupervised losses: negative learning and soft pseudo-labels."""
import numpy as np
import pytest

from fpl_lab.baselines import negative_grad, negative_loss, negative_loss_hinge_form, soft_loss
from fpl_lab.errors import DivergentLossError
from fpl_lab.fpa import FuzzyPositiveSet, assign
from fpl_lab.losses import fuzzy_grad
from fpl_lab.numerics import softmax

from oracles import central_diff, literal_negative_loss, literal_soft_loss


def _set(*indices):
    return FuzzyPositiveSet(tuple(indices), 0.9)


class TestNegativeLoss:
    def test_known_values(self):
        # single negative class at 0.2: -log(0.8); two at 0.25: -2 log(0.75)
        np.testing.assert_allclose(
            negative_loss([0.5, 0.3, 0.2], _set(0, 1)), 0.2231435513142098, rtol=1e-14
        )
        np.testing.assert_allclose(
            negative_loss([0.5, 0.25, 0.25], _set(0)), 0.5753641449035619, rtol=1e-14
        )

    def test_matches_literal_form(self):
        rng = np.random.default_rng(51)
        for _ in range(200):
            c = int(rng.integers(3, 10))
            p = rng.dirichlet(np.ones(c))
            p = p / p.sum()
            k = int(rng.integers(1, c))
            y = _set(*rng.permutation(c)[:k])
            np.testing.assert_allclose(
                negative_loss(p, y), literal_negative_loss(p, y.indices), rtol=1e-12
            )

    def test_zero_when_negatives_have_no_mass(self):
        assert negative_loss([0.6, 0.4, 0.0], _set(0, 1)) == 0.0

    def test_divergent_when_negative_class_certain(self):
        with pytest.raises(DivergentLossError):
            negative_loss([0.0, 1.0], _set(0))

    def test_grad_matches_finite_differences(self):
        rng = np.random.default_rng(52)
        for _ in range(100):
            c = int(rng.integers(3, 8))
            z = rng.uniform(-4, 4, c)
            k = int(rng.integers(1, c))
            y = _set(*rng.permutation(c)[:k])
            numeric = central_diff(lambda v: negative_loss(softmax(v), y), z)
            np.testing.assert_allclose(negative_grad(z, y), numeric, rtol=1e-6, atol=1e-9)


class TestGradientContrast:
    def test_negative_pulls_top1_hardest_fuzzy_pulls_least_confident(self):
        # on the set, |negative grad| is p_i * const (peaks at the top class)
        # while |smoothed grad| scales with e^{-z_i} (peaks at the weakest)
        rng = np.random.default_rng(61)
        checked = 0
        while checked < 200:
            z = rng.normal(0.0, 2.0, int(rng.integers(3, 9)))
            y = assign(softmax(z), 0.95)
            if y.k < 2:
                continue
            members = np.array(y.indices)
            gn = np.abs(negative_grad(z, y)[members])
            gf = np.abs(fuzzy_grad(z, y)[members])
            assert members[np.argmax(gn)] == y.indices[0]
            assert members[np.argmax(gf)] == y.indices[y.k - 1]
            checked += 1


class TestNegativeHingeForm:
    def test_hand_traces(self):
        # z = (3, 1, 0), Y = {0}: both negatives sit below the max other logit
        assert negative_loss_hinge_form([3.0, 1.0, 0.0], _set(0)) == 0.0
        # z = (1, 3, 0), Y = {0}: class 1 exceeds max(z_0, z_2) = 1 by 2
        assert negative_loss_hinge_form([1.0, 3.0, 0.0], _set(0)) == 2.0

    def test_nonnegative(self):
        rng = np.random.default_rng(53)
        for _ in range(200):
            c = int(rng.integers(3, 8))
            z = rng.normal(0, 3, c)
            y = _set(*rng.permutation(c)[: int(rng.integers(1, c))])
            assert negative_loss_hinge_form(z, y) >= 0.0

    def test_zero_unless_a_negative_class_leads(self):
        # the penalty targets negatives that top every other logit
        assert negative_loss_hinge_form([5.0, 4.0, 1.0, 0.0], _set(0, 1)) == 0.0
        assert negative_loss_hinge_form([5.0, 1.0, 4.0, 0.0], _set(0, 1)) == 0.0
        assert negative_loss_hinge_form([1.0, 0.0, 4.0, 0.0], _set(0, 1)) == 3.0


class TestSoftLoss:
    def test_known_value(self):
        # KL((0.5, 0.5) || (0.9, 0.1))
        np.testing.assert_allclose(
            soft_loss([0.9, 0.1], [0.5, 0.5]), 0.5108256237659907, rtol=1e-14
        )

    def test_matches_literal_form(self):
        rng = np.random.default_rng(54)
        for _ in range(200):
            c = int(rng.integers(2, 10))
            p = rng.dirichlet(np.ones(c))
            q = rng.dirichlet(np.ones(c))
            p, q = p / p.sum(), q / q.sum()
            np.testing.assert_allclose(soft_loss(p, q), literal_soft_loss(p, q), rtol=1e-11, atol=1e-14)

    def test_nonnegative_and_zero_on_match(self):
        rng = np.random.default_rng(55)
        for _ in range(200):
            c = int(rng.integers(2, 10))
            p = rng.dirichlet(np.ones(c))
            p = p / p.sum()
            q = rng.dirichlet(np.ones(c))
            q = q / q.sum()
            assert soft_loss(p, q) >= -1e-15
        p = softmax([1.0, 0.0, -1.0])
        assert soft_loss(p, p) == pytest.approx(0.0, abs=1e-14)

    def test_zero_target_mass_is_ignored(self):
        # q has an exact zero: that term contributes nothing
        v = soft_loss([0.25, 0.25, 0.5], [0.5, 0.5, 0.0])
        np.testing.assert_allclose(v, np.log(2.0), rtol=1e-14)

    def test_divergent_when_target_mass_meets_zero_prediction(self):
        with pytest.raises(DivergentLossError):
            soft_loss([1.0, 0.0], [0.5, 0.5])
