import numpy as np
import pytest

from evocast import learners, objectives
from evocast.data import TimeSeriesDataset
from evocast.genotype import GenotypeSpec
from evocast.objectives import (PipelineEvaluator, evaluate_accuracy,
                                make_folds, ncl_diversity, normalize, rmse,
                                update_factors)


class TestRmse:
    def test_zero_error(self):
        assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_hand_formula(self):
        assert rmse([0.0, 0.0], [1.0, 1.0]) == 1.0


class TestCrossValidation:
    def test_matches_reference_cv_loop(self):
        rng = np.random.default_rng(55)
        X = rng.normal(size=(100, 6))
        y = np.cos(X[:, 0]) + X[:, 2] * 0.3
        folds = make_folds(100, 5, rng=np.random.default_rng(7))
        spec = learners.LearnerSpec("elm", (12,), seed=99)
        f1, preds = evaluate_accuracy(X, y, spec, folds)

        # independently coded CV loop with identical folds and seeds
        oof = np.empty(100)
        for i in range(5):
            hold = folds[i]
            fit = np.concatenate([folds[j] for j in range(5) if j != i])
            model = learners.train(spec, X[fit], y[fit])
            oof[hold] = learners.predict(model, X[hold])
        expected = float(np.sqrt(np.mean((oof - y) ** 2)))
        assert abs(f1 - expected) < 1e-10
        assert np.abs(preds - oof).max() < 1e-10

    def test_perfect_predictions_give_zero(self):
        # single-fold fit on exactly linear data with direct links
        rng = np.random.default_rng(56)
        X = rng.normal(size=(50, 3))
        y = X @ np.array([1.0, -2.0, 0.5])
        folds = make_folds(50, 5, rng=np.random.default_rng(1))
        spec = learners.LearnerSpec("rvfl", (5, 1), seed=3)
        f1, _ = evaluate_accuracy(X, y, spec, folds)
        assert f1 < 1e-6

    def test_fold_permutation_shared_and_deterministic(self):
        a = make_folds(40, 5, rng=np.random.default_rng(2))
        b = make_folds(40, 5, rng=np.random.default_rng(2))
        for fa, fb in zip(a, b):
            assert np.array_equal(fa, fb)
        flat = np.sort(np.concatenate(a))
        assert np.array_equal(flat, np.arange(40))

    def test_too_few_samples_rejected(self):
        with pytest.raises(ValueError):
            make_folds(3, 5, rng=np.random.default_rng(0))


class TestNclDiversity:
    def test_single_member_population_is_zero(self):
        preds = np.array([[1.0, 2.0, 3.0]])
        assert ncl_diversity(preds[0], preds, exclude=0) == 0.0

    def test_identical_members_are_zero(self):
        preds = np.array([[1.0, 2.0], [1.0, 2.0]])
        for j in range(2):
            assert ncl_diversity(preds[j], preds, exclude=j) == pytest.approx(0.0)

    def test_hand_case(self):
        preds = np.array([[1.0, 1.0], [-1.0, -1.0]])
        assert ncl_diversity(preds[0], preds, exclude=0) == pytest.approx(-2.0)
        assert ncl_diversity(preds[1], preds, exclude=1) == pytest.approx(-2.0)

    def test_aggregate_identity(self):
        rng = np.random.default_rng(60)
        P = rng.normal(size=(5, 20))
        mean = P.mean(axis=0)
        dev = P - mean
        total = sum(ncl_diversity(P[j], P, exclude=j) for j in range(5))
        expected = np.sum(dev.sum(axis=0) ** 2 - (dev ** 2).sum(axis=0))
        assert abs(total - expected) < 1e-10

    def test_constant_shift_invariance(self):
        rng = np.random.default_rng(61)
        P = rng.normal(size=(4, 15))
        shifted = P + 3.25
        for j in range(4):
            assert ncl_diversity(P[j], P, exclude=j) == pytest.approx(
                ncl_diversity(shifted[j], shifted, exclude=j))

    def test_external_candidate_matches_direct_formula(self):
        rng = np.random.default_rng(62)
        P = rng.normal(size=(6, 10))
        cand = rng.normal(size=10)
        mean = P.mean(axis=0)
        expected = float(np.dot(cand - mean, (P - mean).sum(axis=0)))
        assert ncl_diversity(cand, P) == pytest.approx(expected, abs=1e-12)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            ncl_diversity(np.zeros(3), np.zeros((2, 4)))


class TestNormalization:
    def test_self_normalization(self):
        assert np.allclose(normalize((3.0, 5.0), (3.0, 5.0)), (1.0, 1.0))

    def test_zero_preserved(self):
        assert np.allclose(normalize((0.0, 0.0), (2.0, 7.0)), (0.0, 0.0))

    def test_componentwise_quotient(self):
        rng = np.random.default_rng(63)
        f = rng.normal(size=2)
        factors = np.abs(rng.normal(size=2)) + 0.1
        assert np.allclose(normalize(f, factors), f / factors)

    def test_order_and_sign_preserved(self):
        rng = np.random.default_rng(64)
        raw = rng.normal(size=(10, 2))
        factors = update_factors(raw)
        normed = raw / factors
        for col in range(2):
            assert np.array_equal(np.argsort(raw[:, col]), np.argsort(normed[:, col]))
            assert np.array_equal(np.sign(raw[:, col]), np.sign(normed[:, col]))

    def test_update_factors_hand_cases(self):
        assert update_factors([[1.0, -5.0], [3.0, 2.0], [2.0, 0.0]])[0] == 3.0
        assert update_factors([[1.0, -5.0], [3.0, 2.0]])[1] == 5.0

    def test_zero_column_floored(self):
        factors = update_factors([[0.0, 1.0], [0.0, -2.0]])
        assert factors[0] == 1e-12


class TestPipelineEvaluator:
    def make_evaluator(self):
        rng = np.random.default_rng(70)
        chans = rng.normal(size=(3, 120))
        ds = TimeSeriesDataset(("y", "a", "b"), chans, 0)
        spec = GenotypeSpec(tw_sets=((2, 3, 4), (2, 4), (2, 4)),
                            resolution_set=(1, 2),
                            learner_kind="elm", param_sets=((5, 10),))
        steps = np.arange(spec.max_history(), 120)
        return PipelineEvaluator(ds, steps, spec, seed=11), spec

    def test_bitwise_deterministic(self):
        ev, spec = self.make_evaluator()
        g = np.random.default_rng(1).random(spec.dimension)
        f1a, pa, cfg_a = ev.evaluate(g, learner_seed=42)
        f1b, pb, cfg_b = ev.evaluate(g, learner_seed=42)
        assert f1a == f1b
        assert np.array_equal(pa, pb)
        assert cfg_a == cfg_b

    def test_prediction_vector_length_matches_samples(self):
        ev, spec = self.make_evaluator()
        g = np.random.default_rng(2).random(spec.dimension)
        f1, preds, _ = ev.evaluate(g, learner_seed=1)
        assert preds.size == ev.n_samples
        assert f1 >= 0.0
