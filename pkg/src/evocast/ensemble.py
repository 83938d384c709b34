"""Selective ensembles over pooled Pareto-front members.

Front members are retrained once on the full training slice, deduplicated
on exactly equal training-prediction vectors, and combined four ways:

  mean     -- equal weights
  ls       -- least-squares weights over all members
  sbs+ls   -- greedy backward elimination, refit by least squares each step
  sfs+ls   -- greedy forward selection, refit by least squares each step

Selection is scored on the training fit; both searches stop as soon as no
single move strictly improves it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import data, learners
from .objectives import rmse

METHOD_MEAN = "mean"
METHOD_LS = "ls"
METHOD_SBS_LS = "sbs+ls"
METHOD_SFS_LS = "sfs+ls"

# "strictly improves" with a noise floor: deltas at rounding level are ties,
# otherwise a perfect fit keeps greedily absorbing useless members
_IMPROVE_RTOL = 1e-9
_IMPROVE_ATOL = 1e-15


def _improves(score: float, acc: float) -> bool:
    if not np.isfinite(acc):
        return np.isfinite(score)
    return score < acc - (_IMPROVE_ATOL + _IMPROVE_RTOL * acc)


@dataclass
class TrainedMember:
    """A pipeline configuration fitted on the full training slice."""
    config: object
    learner: learners.TrainedLearner
    seed: int
    train_predictions: np.ndarray
    source: tuple                   # (population size, index within its front)

    def required_history(self) -> int:
        return data.config_history(self.config)


@dataclass
class CandidatePool:
    members: list
    train_steps: np.ndarray
    train_targets: np.ndarray

    def __len__(self):
        return len(self.members)

    def prediction_matrix(self) -> np.ndarray:
        return np.column_stack([m.train_predictions for m in self.members])


@dataclass
class EnsembleModel:
    method: str
    members: list
    weights: np.ndarray
    pool_indices: tuple
    train_rmse: float

    def required_history(self) -> int:
        return max(m.required_history() for m in self.members)


def pool_fronts(fronts, dataset, train_steps) -> CandidatePool:
    """Retrain every front member on the training slice and deduplicate.

    Members whose training-prediction vectors are exactly equal collapse to
    the first occurrence in (front order, member order).
    """
    if not fronts:
        raise ValueError("need at least one front to pool")
    train_steps = np.asarray(train_steps, dtype=int)
    members = []
    for front in fronts:
        for idx, ind in enumerate(front.members):
            samples = data.build_samples(dataset, ind.config, steps=train_steps)
            spec = learners.LearnerSpec(ind.config.learner_kind,
                                        ind.config.learner_params, ind.learner_seed)
            model = learners.train(spec, samples.inputs, samples.targets)
            preds = learners.predict(model, samples.inputs)
            members.append(TrainedMember(
                config=ind.config, learner=model, seed=ind.learner_seed,
                train_predictions=preds, source=(front.ps, idx)))
    pool = CandidatePool(members=members, train_steps=train_steps,
                         train_targets=dataset.target[train_steps])
    return _dedup(pool)


def merge_pools(pools) -> CandidatePool:
    """Union already-retrained pools (in order) and re-deduplicate."""
    if not pools:
        raise ValueError("need at least one pool to merge")
    merged = CandidatePool(
        members=[m for p in pools for m in p.members],
        train_steps=pools[0].train_steps,
        train_targets=pools[0].train_targets,
    )
    return _dedup(merged)


def _dedup(pool: CandidatePool) -> CandidatePool:
    seen, kept = set(), []
    for member in pool.members:
        key = member.train_predictions.tobytes()
        if key in seen:
            continue
        seen.add(key)
        kept.append(member)
    if not kept:
        raise ValueError("candidate pool is empty")
    pool.members = kept
    return pool


def ls_combine(pred_columns, y) -> np.ndarray:
    """Minimum-norm least-squares weights mapping member columns onto y."""
    T = np.asarray(pred_columns, dtype=float)
    if T.ndim != 2 or T.shape[1] < 1:
        raise ValueError("need at least one prediction column")
    return learners.pseudoinverse(T) @ np.asarray(y, dtype=float)


def mean_combine(pool: CandidatePool, indices=None) -> EnsembleModel:
    """Equal-weight combination of the given members (default: all)."""
    indices = tuple(range(len(pool))) if indices is None else tuple(indices)
    if not indices:
        raise ValueError("cannot combine an empty member subset")
    members = [pool.members[i] for i in indices]
    weights = np.full(len(members), 1.0 / len(members))
    fit = np.column_stack([m.train_predictions for m in members]) @ weights
    return EnsembleModel(METHOD_MEAN, members, weights, indices,
                         rmse(pool.train_targets, fit))


def ls_ensemble(pool: CandidatePool) -> EnsembleModel:
    """Least-squares combination of the whole pool."""
    T = pool.prediction_matrix()
    w = ls_combine(T, pool.train_targets)
    return EnsembleModel(METHOD_LS, list(pool.members), w, tuple(range(len(pool))),
                         rmse(pool.train_targets, T @ w))


def sfs_ls(pool: CandidatePool, y=None) -> EnsembleModel:
    """Greedy forward selection with a least-squares refit per round.

    Each round tries appending every remaining candidate and adopts the one
    with the lowest training RMSE, but only on strict improvement; ties go
    to the lowest pool index. The first round always adopts someone.
    """
    y = pool.train_targets if y is None else np.asarray(y, dtype=float)
    remaining = list(range(len(pool)))
    selected: list = []
    acc = np.inf
    weights = None
    while remaining:
        best_idx, best_w = None, None
        for k in remaining:
            cols = [pool.members[j].train_predictions for j in selected]
            cols.append(pool.members[k].train_predictions)
            T = np.column_stack(cols)
            w = ls_combine(T, y)
            score = rmse(y, T @ w)
            if _improves(score, acc):
                acc, best_idx, best_w = score, k, w
        if best_idx is None:
            break
        selected.append(best_idx)
        remaining.remove(best_idx)
        weights = best_w
    return EnsembleModel(METHOD_SFS_LS, [pool.members[j] for j in selected],
                         weights, tuple(selected), float(acc))


def sbs_ls(pool: CandidatePool, y=None) -> EnsembleModel:
    """Greedy backward elimination with a least-squares refit per round.

    Starts from the full-pool fit; each round removes the member whose
    removal lowers training RMSE the most, stopping when nothing strictly
    improves or a single member remains.
    """
    y = pool.train_targets if y is None else np.asarray(y, dtype=float)
    current = list(range(len(pool)))
    T = pool.prediction_matrix()
    weights = ls_combine(T, y)
    acc = rmse(y, T @ weights)
    while len(current) > 1:
        best_drop, best_w = None, None
        for k in current:
            kept = [j for j in current if j != k]
            T = np.column_stack([pool.members[j].train_predictions for j in kept])
            w = ls_combine(T, y)
            score = rmse(y, T @ w)
            if _improves(score, acc):
                acc, best_drop, best_w = score, k, w
        if best_drop is None:
            break
        current.remove(best_drop)
        weights = best_w
    return EnsembleModel(METHOD_SBS_LS, [pool.members[j] for j in current],
                         weights, tuple(current), float(acc))


def predict_ensemble(model: EnsembleModel, dataset, steps=None) -> np.ndarray:
    """Weighted combination of per-member predictions on a new series.

    Each member rebuilds its own input representation from the raw data;
    default steps are every step all members can reach.
    """
    if steps is None:
        req = model.required_history()
        if req >= dataset.length:
            raise data.DataError(
                f"series of length {dataset.length} is shorter than the "
                f"ensemble's required history {req}")
        steps = np.arange(req, dataset.length)
    out = None
    for member, w in zip(model.members, model.weights):
        samples = data.build_samples(dataset, member.config, steps=steps)
        preds = learners.predict(member.learner, samples.inputs)
        out = w * preds if out is None else out + w * preds
    return out


def model_to_dict(model: EnsembleModel) -> dict:
    return {
        "method": model.method,
        "weights": [float(w) for w in model.weights],
        "train_rmse": model.train_rmse,
        "members": [
            {
                "config": m.config.to_dict(),
                "seed": int(m.seed),
                "source": [int(m.source[0]), int(m.source[1])],
                "learner": learners.learner_to_dict(m.learner),
            }
            for m in model.members
        ],
    }


def model_from_dict(d: dict) -> EnsembleModel:
    from .genotype import PipelineConfig

    members = []
    for entry in d["members"]:
        members.append(TrainedMember(
            config=PipelineConfig.from_dict(entry["config"]),
            learner=learners.learner_from_dict(entry["learner"]),
            seed=int(entry["seed"]),
            train_predictions=np.empty(0),
            source=tuple(entry["source"]),
        ))
    return EnsembleModel(
        method=d["method"],
        members=members,
        weights=np.asarray(d["weights"], dtype=float),
        pool_indices=tuple(range(len(members))),
        train_rmse=float(d["train_rmse"]),
    )
