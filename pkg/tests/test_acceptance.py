"""Acceptance suite: one test per release criterion, each printing a
pass/fail line with its measured runtime. Run with `pytest -s` to see the
lines as they happen."""

import os
import time

import numpy as np
import pytest

from evocast import learners, moead
from evocast.data import load_csv, split_train_test
from evocast.ensemble import ls_combine, sfs_ls
from evocast.experiment import (ExperimentConfig, generate_synthetic,
                                run_experiment, stage_seed)
from evocast.genotype import GenotypeSpec
from evocast.learners import LearnerSpec, predict, pseudoinverse, train
from evocast.moead import MoeadConfig, nondominated_mask
from evocast.objectives import evaluate_accuracy, make_folds, ncl_diversity

from test_ensemble import _sfs_oracle, fake_pool
from test_learners import penrose_violation
from test_moead import ToyEvaluator, dominance_oracle


def _report(criterion, ok, detail, elapsed, budget=None):
    state = "PASS" if ok else "FAIL"
    bound = f" (< {budget:.0f}s budget)" if budget else ""
    print(f"[{state}] criterion {criterion}: {detail} [{elapsed:.1f}s{bound}]")
    assert ok, f"criterion {criterion} failed: {detail}"
    if budget is not None:
        assert elapsed < budget, f"criterion {criterion} overran {budget}s"


TREND_SEED = 20250810


@pytest.fixture(scope="module")
def trend_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("accept") / "trend.csv"
    generate_synthetic(path, length=2000, n_aux=3, noise=0.05, seed=TREND_SEED)
    return path


@pytest.fixture(scope="module")
def small_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("accept_small") / "small.csv"
    generate_synthetic(path, length=500, n_aux=2, noise=0.02, seed=3)
    return path


def small_config(csv_path, master_seed=404):
    return ExperimentConfig(
        data_path=str(csv_path), target_column="y", timestamp_column="t",
        learner="elm", ps=(10,), neighborhood_size=4, max_fes=200,
        target_tw=(2, 3, 4), aux_tw=(2, 4), resolutions=(1, 2),
        hidden_neurons=(5, 10), train_fraction=2 / 3, repetitions=1,
        master_seed=master_seed)


def test_criterion_1_numeric_kernel():
    started = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for trial in range(25):
        shapes = [rng.normal(size=(3, 3)), rng.normal(size=(5, 3)),
                  rng.normal(size=(3, 5))]
        low = rng.normal(size=(4, 2))
        shapes.append(low @ rng.normal(size=(2, 4)))
        for A in shapes:
            worst = max(worst, penrose_violation(A, pseudoinverse(A)))
    ls_worst = 0.0
    for _ in range(100):
        T = rng.normal(size=(50, 8))
        y = rng.normal(size=50)
        w = ls_combine(T, y)
        w_ref = np.linalg.solve(T.T @ T, T.T @ y)
        ls_worst = max(ls_worst, np.abs(w - w_ref).max())
    elapsed = time.perf_counter() - started
    _report(1, worst < 1e-9 and ls_worst < 1e-8,
            f"penrose max violation {worst:.2e}, ls-vs-normal-eq {ls_worst:.2e}",
            elapsed, budget=10)


def test_criterion_2_learner_interpolation():
    started = time.perf_counter()
    hits = 0
    for seed in range(20):
        rng = np.random.default_rng(5000 + seed)
        X = rng.normal(size=(20, 5))
        y = rng.normal(size=20)
        model = train(LearnerSpec("elm", (20,), seed=seed), X, y)
        if np.sqrt(np.mean((predict(model, X) - y) ** 2)) < 1e-4:
            hits += 1

    rng = np.random.default_rng(77)
    X = rng.normal(size=(60, 4)) + 0.5
    y = X @ np.array([1.5, -2.0, 0.25, 0.75])
    rvfl_ok = True
    for n in (3, 20, 45):
        model = train(LearnerSpec("rvfl", (n, 1), seed=n), X, y)
        rvfl_ok &= np.sqrt(np.mean((predict(model, X) - y) ** 2)) < 1e-6

    Xe, ye = rng.normal(size=(30, 4)), rng.normal(size=30)
    elm = train(LearnerSpec("elm", (12,), seed=9), Xe, ye)
    rvfl0 = train(LearnerSpec("rvfl", (12, 0), seed=9), Xe, ye)
    bitwise = (np.array_equal(elm.output_weights, rvfl0.output_weights)
               and np.array_equal(predict(elm, Xe), predict(rvfl0, Xe)))
    elapsed = time.perf_counter() - started
    _report(2, hits >= 18 and rvfl_ok and bitwise,
            f"elm interpolation {hits}/20 seeds, rvfl exact-linear {rvfl_ok}, "
            f"rvfl(0)==elm {bitwise}", elapsed, budget=30)


def test_criterion_3_objective_correctness():
    started = time.perf_counter()
    preds = np.array([[1.0, 1.0], [-1.0, -1.0]])
    hand = ncl_diversity(preds[0], preds, exclude=0)
    hand_ok = hand == -2.0

    rng = np.random.default_rng(3)
    identity_ok = True
    for _ in range(20):
        P = rng.normal(size=(5, 20))
        dev = P - P.mean(axis=0)
        total = sum(ncl_diversity(P[j], P, exclude=j) for j in range(5))
        expected = np.sum(dev.sum(axis=0) ** 2 - (dev ** 2).sum(axis=0))
        identity_ok &= abs(total - expected) < 1e-10

    X = rng.normal(size=(100, 6))
    y = np.cos(X[:, 0]) + 0.3 * X[:, 2]
    folds = make_folds(100, 5, rng=np.random.default_rng(11))
    spec = LearnerSpec("elm", (15,), seed=21)
    f1, oof = evaluate_accuracy(X, y, spec, folds)
    ref = np.empty(100)
    for i in range(5):
        fit = np.concatenate([folds[j] for j in range(5) if j != i])
        model = train(spec, X[fit], y[fit])
        ref[folds[i]] = predict(model, X[folds[i]])
    cv_ok = (abs(f1 - float(np.sqrt(np.mean((ref - y) ** 2)))) < 1e-10
             and np.abs(oof - ref).max() < 1e-10)
    elapsed = time.perf_counter() - started
    _report(3, hand_ok and identity_ok and cv_ok,
            f"hand f2 {hand!r}, aggregate identity {identity_ok}, cv oracle {cv_ok}",
            elapsed)


def test_criterion_4_moead_machinery():
    started = time.perf_counter()
    rng = np.random.default_rng(4)
    filter_ok = True
    for _ in range(100):
        F = rng.normal(size=(200, 2))
        filter_ok &= list(nondominated_mask(F)) == dominance_oracle(F.tolist())

    fes_ok = True
    for m, max_fes in ((10, 10), (20, 2000), (7, 100)):
        ev = ToyEvaluator()
        moead.run(MoeadConfig(m, 4, max_fes, 3, 1), ev)
        fes_ok &= (ev.calls - m) % m == 0 and max_fes <= ev.calls <= max_fes + m - 1

    front = moead.run(MoeadConfig(20, 4, 2000, 5, 1), ToyEvaluator())
    values = np.array([mem.genotype[0] for mem in front.members])
    objs = front.objectives()
    toy_ok = (np.all((values >= 0.25) & (values <= 0.75))
              and values.max() - values.min() >= 0.3
              and bool(np.all(nondominated_mask(objs))))
    elapsed = time.perf_counter() - started
    _report(4, filter_ok and fes_ok and toy_ok,
            f"filter oracle {filter_ok}, fes exact {fes_ok}, toy front "
            f"span {values.max() - values.min():.2f} in "
            f"[{values.min():.2f}, {values.max():.2f}]", elapsed, budget=60)


def test_criterion_5_selective_ensemble(small_csv, tmp_path):
    started = time.perf_counter()
    rng = np.random.default_rng(5)
    trajectory_ok = True
    for _ in range(50):
        y = rng.normal(size=30)
        cols = rng.normal(size=(30, 8)) + y[:, None] * rng.random(8)
        model = sfs_ls(fake_pool(cols, y))
        trajectory_ok &= model.pool_indices == tuple(_sfs_oracle(cols, y))

    monotone_ok = True
    for _ in range(10):
        y = rng.normal(size=25)
        cols = rng.normal(size=(25, 6)) + y[:, None] * 0.4
        pool = fake_pool(cols, y)
        model = sfs_ls(pool)
        # adopted rounds strictly improve, so the final fit beats any single member
        singles = [float(np.sqrt(np.mean(
            (cols[:, [k]] @ ls_combine(cols[:, [k]], y) - y) ** 2)))
            for k in range(6)]
        monotone_ok &= model.train_rmse <= min(singles) + 1e-12
        from evocast.ensemble import ls_ensemble, sbs_ls
        monotone_ok &= sbs_ls(pool).train_rmse <= ls_ensemble(pool).train_rmse + 1e-12

    report = run_experiment(small_config(small_csv), tmp_path / "c5")
    rows_ok = all(r["status"] == "ok" for r in report.rows)
    pooled_sfs = [r for r in report.rows
                  if r["ps"] == "pooled" and r["method"] == "sfs+ls"]
    best_single = min(r["best_member_train_rmse"] for r in report.rows
                      if r["ps"] != "pooled")
    pooled_ok = all(r["train_rmse"] <= best_single + 1e-12 for r in pooled_sfs)
    elapsed = time.perf_counter() - started
    _report(5, trajectory_ok and monotone_ok and rows_ok and pooled_ok,
            f"sfs trajectory oracle {trajectory_ok}, monotone {monotone_ok}, "
            f"pooled<=best-member {pooled_ok}", elapsed)


def test_criterion_6_desk_scale_trend(trend_csv, tmp_path):
    started = time.perf_counter()
    config = ExperimentConfig(
        data_path=str(trend_csv), target_column="y", timestamp_column="t",
        learner="elm", ps=(10, 20), neighborhood_size=4, max_fes=2000,
        target_tw=(2, 3, 4, 6), aux_tw=(2, 3, 4, 6), resolutions=(1, 2),
        hidden_neurons=(4, 8, 12, 16), train_fraction=2 / 3, repetitions=10,
        master_seed=TREND_SEED)
    jobs = 2 if len(os.sched_getaffinity(0)) > 1 else 1
    report = run_experiment(config, tmp_path / "trend", jobs=jobs)
    assert all(r["status"] == "ok" for r in report.rows)

    sfs_wins = 0
    for rep in range(10):
        rows = [r for r in report.rows if r["repetition"] == rep and r["ps"] != "pooled"]
        sfs = np.mean([r["test_rmse"] for r in rows if r["method"] == "sfs+ls"])
        mean = np.mean([r["test_rmse"] for r in rows if r["method"] == "mean"])
        sfs_wins += sfs <= mean

    pooled_mean = np.mean([r["test_rmse"] for r in report.rows
                           if r["ps"] == "pooled" and r["method"] == "sfs+ls"])
    single_means = []
    for ps in (10, 20):
        single_means.append(np.mean([
            r["test_rmse"] for r in report.rows
            if r["ps"] == ps and r["method"] == "sfs+ls"]))
    best_single_mean = min(single_means)
    pooled_ok = pooled_mean <= best_single_mean * 1.05
    elapsed = time.perf_counter() - started
    _report(6, sfs_wins >= 8 and pooled_ok,
            f"sfs<=mean in {sfs_wins}/10 seeds; pooled sfs {pooled_mean:.4f} vs "
            f"best single {best_single_mean:.4f} (+5% allowed)",
            elapsed, budget=600)


def test_criterion_7_encoding_regression():
    started = time.perf_counter()
    dims = {}
    for kind, expected in (("elm", 85), ("rvfl", 86), ("bls", 87)):
        cfg = ExperimentConfig(data_path="x", target_column="y", learner=kind)
        dims[kind] = cfg.genotype_spec(n_aux=5).dimension
    ok = dims == {"elm": 85, "rvfl": 86, "bls": 87}
    _report(7, ok, f"dimensions {dims}", time.perf_counter() - started)


def test_criterion_8_determinism(small_csv, tmp_path):
    started = time.perf_counter()
    config = small_config(small_csv, master_seed=777)
    first = run_experiment(config, tmp_path / "d1")
    second = run_experiment(config, tmp_path / "d2")
    body_ok = first.body() == second.body()
    models_ok = True
    for path in sorted((tmp_path / "d1" / "models").glob("*.json")):
        other = tmp_path / "d2" / "models" / path.name
        models_ok &= path.read_bytes() == other.read_bytes()
    elapsed = time.perf_counter() - started
    _report(8, body_ok and models_ok,
            f"report bodies identical {body_ok}, model files identical {models_ok}",
            elapsed)
