"""Closed-form random-weight learners.

Three single-pass regressors whose only trained parameters are the output
weights, solved by a Moore-Penrose pseudoinverse:

  elm   -- sigmoid hidden layer on randomly projected inputs
  rvfl  -- elm plus optional direct input-to-output links
  bls   -- sigmoid mapped-feature windows plus one enhancement block

Random projections are drawn uniformly from [-1, 1] and are fully
determined by the spec seed, so a trained model can be rebuilt from
(spec, standardization stats, output weights) alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("elm", "rvfl", "bls")
_PARAM_ARITY = {"elm": 1, "rvfl": 2, "bls": 3}


@dataclass(frozen=True)
class LearnerSpec:
    """Which learner to build: kind, integer hyperparameters, weight seed.

    params by kind:
      elm:  (hidden_neurons,)
      rvfl: (hidden_neurons, direct_link)        direct_link in {0, 1}
      bls:  (feature_windows, nodes_per_window, enhancement_nodes)
    """
    kind: str
    params: tuple
    seed: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown learner kind {self.kind!r}")
        object.__setattr__(self, "params", tuple(int(p) for p in self.params))
        arity = _PARAM_ARITY[self.kind]
        if len(self.params) != arity:
            raise ValueError(f"{self.kind} takes {arity} params, got {len(self.params)}")
        if self.kind == "rvfl" and self.params[1] not in (0, 1):
            raise ValueError("rvfl direct_link must be 0 or 1")
        sizes = self.params[:1] if self.kind != "bls" else self.params
        if any(p < 1 for p in sizes):
            raise ValueError(f"{self.kind} size parameters must be >= 1")


@dataclass
class TrainedLearner:
    spec: LearnerSpec
    input_width: int
    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: float
    y_std: float
    output_weights: np.ndarray


def pseudoinverse(A) -> np.ndarray:
    """Moore-Penrose inverse via SVD.

    Singular values below eps * max(shape) * sigma_max are treated as zero.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.size == 0:
        raise ValueError("pseudoinverse needs a non-empty 2-d matrix")
    if not np.all(np.isfinite(A)):
        raise ValueError("pseudoinverse input contains non-finite entries")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    cutoff = np.finfo(float).eps * max(A.shape) * (s[0] if s.size else 0.0)
    inv = np.where(s > cutoff, np.divide(1.0, s, out=np.zeros_like(s), where=s > 0), 0.0)
    return (Vt.T * inv) @ U.T


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -500.0, 500.0)))


def train(spec: LearnerSpec, X, y) -> TrainedLearner:
    """Fit output weights in closed form: B = pinv(H) @ y_standardized.

    Inputs and the target are standardized per column with the training
    statistics; zero-variance columns keep scale 1 so they pass through.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError("training inputs must be a non-empty 2-d matrix")
    if X.shape[0] != y.size:
        raise ValueError("inputs and targets disagree on sample count")
    x_mean = X.mean(axis=0)
    x_std = X.std(axis=0)
    x_std = np.where(x_std > 0, x_std, 1.0)
    y_mean = float(y.mean())
    y_std = float(y.std()) or 1.0
    Xs = (X - x_mean) / x_std
    ys = (y - y_mean) / y_std
    H = _hidden(spec, Xs)
    B = pseudoinverse(H) @ ys
    return TrainedLearner(
        spec=spec,
        input_width=X.shape[1],
        x_mean=x_mean,
        x_std=x_std,
        y_mean=y_mean,
        y_std=y_std,
        output_weights=B,
    )


def predict(model: TrainedLearner, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.input_width:
        raise ValueError(
            f"prediction inputs must have width {model.input_width}, got {X.shape}")
    Xs = (X - model.x_mean) / model.x_std
    H = _hidden(model.spec, Xs)
    return H @ model.output_weights * model.y_std + model.y_mean


def _hidden(spec: LearnerSpec, Xs: np.ndarray) -> np.ndarray:
    """Assemble the hidden representation from seed-regenerated projections."""
    rng = np.random.default_rng(spec.seed)
    d_in = Xs.shape[1]
    if spec.kind in ("elm", "rvfl"):
        n = spec.params[0]
        W = rng.uniform(-1.0, 1.0, size=(d_in, n))
        b = rng.uniform(-1.0, 1.0, size=n)
        H = sigmoid(Xs @ W + b)
        if spec.kind == "rvfl" and spec.params[1] == 1:
            H = np.hstack([H, Xs])
        return H
    n_win, per_win, n_enh = spec.params
    blocks = []
    for _ in range(n_win):
        W = rng.uniform(-1.0, 1.0, size=(d_in, per_win))
        b = rng.uniform(-1.0, 1.0, size=per_win)
        blocks.append(sigmoid(Xs @ W + b))
    Z = np.hstack(blocks)
    W_h = rng.uniform(-1.0, 1.0, size=(Z.shape[1], n_enh))
    b_h = rng.uniform(-1.0, 1.0, size=n_enh)
    return np.hstack([Z, sigmoid(Z @ W_h + b_h)])


def learner_to_dict(model: TrainedLearner) -> dict:
    """JSON-shaped dump; random projections are regenerated from the seed."""
    return {
        "kind": model.spec.kind,
        "params": list(model.spec.params),
        "seed": int(model.spec.seed),
        "input_width": int(model.input_width),
        "x_mean": model.x_mean.tolist(),
        "x_std": model.x_std.tolist(),
        "y_mean": model.y_mean,
        "y_std": model.y_std,
        "output_weights": model.output_weights.tolist(),
    }


def learner_from_dict(d: dict) -> TrainedLearner:
    return TrainedLearner(
        spec=LearnerSpec(d["kind"], tuple(d["params"]), int(d["seed"])),
        input_width=int(d["input_width"]),
        x_mean=np.asarray(d["x_mean"], dtype=float),
        x_std=np.asarray(d["x_std"], dtype=float),
        y_mean=float(d["y_mean"]),
        y_std=float(d["y_std"]),
        output_weights=np.asarray(d["output_weights"], dtype=float),
    )
