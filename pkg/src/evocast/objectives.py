"""Bi-objective fitness: cross-validated accuracy and negative-correlation
diversity.

f1 is the RMSE of out-of-fold predictions under a 5-fold split whose
permutation is drawn once per optimizer run and shared by every evaluation,
so values are comparable across individuals. f2 couples an individual to
the rest of the population: deviation from the population-mean prediction,
multiplied by the summed deviations of everyone else. Both are minimized;
strongly negative f2 means the member disagrees with the crowd.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import data, genotype, learners

FACTOR_FLOOR = 1e-12


@dataclass
class EvaluatedIndividual:
    genotype: np.ndarray
    config: genotype.PipelineConfig | None
    f: tuple                        # raw (f1, f2)
    predictions: np.ndarray
    learner_seed: int


def rmse(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    return float(np.sqrt(np.mean((y_true - y_pred) ** 2)))


def make_folds(n_samples: int, n_folds: int, rng) -> list:
    """Shuffle sample indices once and cut them into near-equal folds."""
    if n_samples < n_folds:
        raise ValueError(f"need at least {n_folds} samples, got {n_samples}")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    perm = rng.permutation(n_samples)
    return [f for f in np.array_split(perm, n_folds)]


def evaluate_accuracy(inputs, targets, spec: learners.LearnerSpec, folds) -> tuple:
    """Out-of-fold CV: returns (f1, predictions in sample order)."""
    inputs = np.asarray(inputs, dtype=float)
    targets = np.asarray(targets, dtype=float)
    predictions = np.empty(targets.size)
    for i, fold in enumerate(folds):
        train_idx = np.concatenate([f for j, f in enumerate(folds) if j != i])
        model = learners.train(spec, inputs[train_idx], targets[train_idx])
        predictions[fold] = learners.predict(model, inputs[fold])
    return rmse(targets, predictions), predictions


def ncl_diversity(pred_j, population_preds, exclude: int | None = None) -> float:
    """Negative-correlation diversity of one prediction vector vs a population.

    `exclude` names the vector's own row when it belongs to the population;
    for an external candidate all rows count.
    """
    pred_j = np.asarray(pred_j, dtype=float)
    P = np.asarray(population_preds, dtype=float)
    if P.ndim != 2 or P.shape[0] < 1:
        raise ValueError("population predictions must be a non-empty matrix")
    if P.shape[1] != pred_j.size:
        raise ValueError("prediction length mismatch with population")
    mean = P.mean(axis=0)
    dev_sum = P.sum(axis=0) - P.shape[0] * mean
    own = pred_j - mean
    others = dev_sum - own if exclude is not None else dev_sum
    return float(np.dot(own, others))


def normalize(f, factors) -> np.ndarray:
    factors = np.asarray(factors, dtype=float)
    if np.any(factors <= 0):
        raise ValueError("normalization factors must be positive")
    return np.asarray(f, dtype=float) / factors


def update_factors(raw_f) -> np.ndarray:
    """Per-objective max |value| over a population, floored away from zero."""
    raw_f = np.atleast_2d(np.asarray(raw_f, dtype=float))
    if raw_f.shape[0] < 1:
        raise ValueError("cannot compute factors of an empty population")
    return np.maximum(np.abs(raw_f).max(axis=0), FACTOR_FLOOR)


class PipelineEvaluator:
    """Scores genotypes against a fixed training slice of a dataset.

    The fold permutation is fixed at construction; evaluation is then a pure
    function of (genotype, learner seed).
    """

    def __init__(self, dataset: data.TimeSeriesDataset, train_steps,
                 spec: genotype.GenotypeSpec, seed: int, n_folds: int = 5):
        self.dataset = dataset
        self.train_steps = np.asarray(train_steps, dtype=int)
        self.spec = spec
        self.n_folds = n_folds
        self.folds = make_folds(self.train_steps.size, n_folds, np.random.default_rng(seed))
        self._targets = dataset.target[self.train_steps]

    @property
    def n_samples(self) -> int:
        return self.train_steps.size

    def evaluate(self, g: np.ndarray, learner_seed: int):
        """Returns (f1, out-of-fold predictions, decoded config)."""
        config = genotype.decode(g, self.spec)
        samples = data.build_samples(self.dataset, config, steps=self.train_steps)
        spec = learners.LearnerSpec(config.learner_kind, config.learner_params, learner_seed)
        f1, predictions = evaluate_accuracy(samples.inputs, samples.targets, spec, self.folds)
        return f1, predictions, config

    def diversity(self, predictions, population_preds, exclude=None) -> float:
        return ncl_diversity(predictions, population_preds, exclude)
