"""Configuration-driven experiment runner.

One experiment = repeated (split, search, combine, score) cycles:

  for each repetition: split samples into train/test, run one search per
  population size, build mean/ls/sbs+ls/sfs+ls ensembles per front plus
  ls/sbs+ls/sfs+ls over the pooled fronts, and score everything on the
  held-out test steps.

Every stage seed fans out from the master seed through a stable hash, so a
report is bitwise reproducible (timing columns aside) and any single stage
can be replayed in isolation.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import data, ensemble, learners, moead
from .genotype import GenotypeSpec
from .objectives import PipelineEvaluator, rmse

logger = logging.getLogger("evocast")

REPORT_COLUMNS = (
    "repetition", "ps", "method", "status", "train_rmse", "test_rmse",
    "n_selected", "pool_size", "best_member_train_rmse", "run_seed",
    "config_hash", "error", "wall_clock_s",
)
TIMING_COLUMNS = ("wall_clock_s",)
FRONT_METHODS = (ensemble.METHOD_MEAN, ensemble.METHOD_LS,
                 ensemble.METHOD_SBS_LS, ensemble.METHOD_SFS_LS)
POOLED_METHODS = (ensemble.METHOD_LS, ensemble.METHOD_SBS_LS, ensemble.METHOD_SFS_LS)


class ConfigError(ValueError):
    """Raised for malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    data_path: str
    target_column: str
    timestamp_column: str | None = None
    learner: str = "elm"
    ps: tuple = (30, 50, 80, 100, 120, 150)
    neighborhood_size: int = 4
    max_fes: int = 25000
    target_tw: tuple = tuple(range(6, 97, 6))
    aux_tw: tuple = tuple(range(6, 49, 2))
    resolutions: tuple = tuple(range(1, 16))
    hidden_neurons: tuple = tuple(range(10, 401, 10))
    direct_link: tuple = (0, 1)
    bls_windows: tuple = tuple(range(1, 21))
    bls_nodes: tuple = tuple(range(1, 51))
    bls_enhancement: tuple = tuple(range(10, 1501, 10))
    train_fraction: float = 2.0 / 3.0
    repetitions: int = 10
    folds: int = 5
    master_seed: int = 0

    def __post_init__(self):
        if self.learner not in learners.KINDS:
            raise ConfigError(f"unknown learner {self.learner!r}")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if not self.ps:
            raise ConfigError("need at least one population size")
        if any(p < self.neighborhood_size for p in self.ps):
            raise ConfigError("every population size must be >= the neighborhood size")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must be in (0, 1)")

    def param_sets(self) -> tuple:
        if self.learner == "elm":
            return (self.hidden_neurons,)
        if self.learner == "rvfl":
            return (self.hidden_neurons, self.direct_link)
        return (self.bls_windows, self.bls_nodes, self.bls_enhancement)

    def genotype_spec(self, n_aux: int) -> GenotypeSpec:
        return GenotypeSpec(
            tw_sets=(self.target_tw,) + (self.aux_tw,) * n_aux,
            resolution_set=self.resolutions,
            learner_kind=self.learner,
            param_sets=self.param_sets(),
        )


_LIST_KEYS = {"ps", "target_tw", "aux_tw", "resolutions", "hidden_neurons",
              "direct_link", "bls_windows", "bls_nodes", "bls_enhancement"}
_INT_KEYS = {"neighborhood_size", "max_fes", "repetitions", "folds", "master_seed"}
_FLOAT_KEYS = {"train_fraction"}
_STR_KEYS = {"data_path", "target_column", "timestamp_column", "learner"}


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat `key = value` experiment format; unknown keys are errors."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = (p.strip() for p in line.partition("="))
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            if key in _LIST_KEYS:
                values[key] = tuple(int(v.strip()) for v in val.split(",") if v.strip())
            elif key in _INT_KEYS:
                values[key] = int(val)
            elif key in _FLOAT_KEYS:
                values[key] = float(val)
            elif key in _STR_KEYS:
                values[key] = val
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    missing = {"data_path", "target_column"} - values.keys()
    if missing:
        raise ConfigError(f"missing required keys: {sorted(missing)}")
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def config_hash(config: ExperimentConfig) -> str:
    canon = json.dumps(asdict(config), sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def stage_seed(master: int, label: str, repetition: int = 0, ps: int = 0) -> int:
    """Stable fan-out of the master seed: hash(master, stage label, rep, ps)."""
    digest = hashlib.sha256(f"{master}|{label}|{repetition}|{ps}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def generate_synthetic(path, length: int, n_aux: int, noise: float, seed: int,
                       period: int = 50, coupling: float = 0.2) -> Path:
    """Write a synthetic multivariate series with a learnable target.

    target[t] = sin(2*pi*t/period) + 0.5*sin(4*pi*t/period + 0.7)
                + coupling * sum_c aux_c[t - (3 + 2c)] + noise * N(0, 1)

    Auxiliary channels are independent smoothed (window 25) standardized
    random walks. Fully deterministic per seed.
    """
    if length < 200:
        raise ConfigError(f"synthetic length must be >= 200, got {length}")
    if n_aux < 1:
        raise ConfigError("need at least one auxiliary channel")
    rng = np.random.default_rng(seed)
    t = np.arange(length)
    aux = []
    for _ in range(n_aux):
        walk = np.cumsum(rng.standard_normal(length))
        kernel = np.full(25, 1.0 / 25.0)
        smooth = np.convolve(walk, kernel, mode="same")
        aux.append((smooth - smooth.mean()) / (smooth.std() or 1.0))
    target = np.sin(2 * np.pi * t / period) + 0.5 * np.sin(4 * np.pi * t / period + 0.7)
    for c, series in enumerate(aux):
        lag = 3 + 2 * c
        padded = np.concatenate([np.full(lag, series[0]), series[:length - lag]])
        target = target + coupling * padded
    target = target + noise * rng.standard_normal(length)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# target[t] = sin(2*pi*t/{period}) + 0.5*sin(4*pi*t/{period} + 0.7)"
                 f" + {coupling!r}*sum_c aux_c[t-(3+2c)] + {noise!r}*N(0,1)\n")
        fh.write(f"# aux channels: smoothed (window 25) standardized random walks;"
                 f" seed={seed}\n")
        writer = csv.writer(fh)
        writer.writerow(["t", "y"] + [f"aux{c + 1}" for c in range(n_aux)])
        for i in range(length):
            writer.writerow([i, repr(float(target[i]))] +
                            [repr(float(a[i])) for a in aux])
    return path


@dataclass
class RunReport:
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def body(self, include_timing: bool = False) -> list:
        cols = [c for c in REPORT_COLUMNS if include_timing or c not in TIMING_COLUMNS]
        return [tuple(row.get(c, "") for c in cols) for row in self.rows]


def _fmt(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_report(report: RunReport, out_dir) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "report.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for row in report.rows:
            writer.writerow([_fmt(row.get(c, "")) for c in REPORT_COLUMNS])
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(report.summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path


def _search_task(payload) -> tuple:
    """One seeded search; module-level so worker processes can import it."""
    (rep, ps, dataset, train_steps, spec, n_folds, t_size, max_fes,
     run_seed, fold_seed) = payload
    started = time.perf_counter()
    evaluator = PipelineEvaluator(dataset, train_steps, spec, seed=fold_seed,
                                  n_folds=n_folds)
    cfg = moead.MoeadConfig(population_size=ps, neighborhood_size=t_size,
                            max_fes=max_fes, run_seed=run_seed,
                            dimension=spec.dimension)
    front = moead.run(cfg, evaluator)
    return rep, ps, front, time.perf_counter() - started


def run_experiment(config: ExperimentConfig, out_dir, jobs: int = 1) -> RunReport:
    """Execute the full experiment and write report, summary, and model files."""
    out_dir = Path(out_dir)
    (out_dir / "models").mkdir(parents=True, exist_ok=True)
    dataset = data.load_csv(config.data_path, config.target_column,
                            config.timestamp_column)
    spec = config.genotype_spec(dataset.n_channels - 1)
    history = spec.max_history()
    chash = config_hash(config)
    schema = {
        "channel_names": list(dataset.names),
        "target_column": config.target_column,
        "timestamp_column": config.timestamp_column,
        "target_index": dataset.target_index,
    }
    report = RunReport(summary={
        "config": asdict(config),
        "config_hash": chash,
        "history": history,
        "dropped_rows": dataset.dropped_rows,
        "stage_seconds": {},
    })

    tasks = []
    for rep in range(config.repetitions):
        split_seed = stage_seed(config.master_seed, "split", rep)
        train_steps, _ = data.split_train_test(dataset, config.train_fraction,
                                               split_seed, history)
        for ps in config.ps:
            tasks.append((rep, ps, dataset, train_steps, spec, config.folds,
                          config.neighborhood_size, config.max_fes,
                          stage_seed(config.master_seed, "moead", rep, ps),
                          stage_seed(config.master_seed, "folds", rep, ps)))

    fronts: dict = {}
    failures: dict = {}

    def _record(task, outcome, error=None):
        rep, ps = task[0], task[1]
        if error is not None:
            logger.warning("search failed for repetition %s ps %s: %s", rep, ps, error)
            failures.setdefault(rep, f"search ps={ps}: {error}")
            return
        _, _, front, seconds = outcome
        fronts[(rep, ps)] = front
        report.summary["stage_seconds"][f"search_rep{rep}_ps{ps}"] = seconds

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [(task, pool.submit(_search_task, task)) for task in tasks]
            for task, future in futures:
                try:
                    _record(task, future.result())
                except Exception as exc:
                    _record(task, None, error=exc)
    else:
        for task in tasks:
            try:
                _record(task, _search_task(task))
            except Exception as exc:
                _record(task, None, error=exc)

    for rep in range(config.repetitions):
        if rep in failures:
            report.rows.append(_error_row(rep, chash, failures[rep]))
            continue
        try:
            started = time.perf_counter()
            split_seed = stage_seed(config.master_seed, "split", rep)
            train_steps, test_steps = data.split_train_test(
                dataset, config.train_fraction, split_seed, history)
            per_ps_pools = []
            for ps in config.ps:
                front = fronts[(rep, ps)]
                pool = ensemble.pool_fronts([front], dataset, train_steps)
                per_ps_pools.append(pool)
                models = _front_models(pool)
                for method in FRONT_METHODS:
                    report.rows.append(_model_row(
                        rep, ps, models[method], pool, dataset, test_steps,
                        front.run_seed, chash, out_dir, schema))
            pooled = ensemble.merge_pools(per_ps_pools)
            pooled_models = _front_models(pooled, methods=POOLED_METHODS)
            for method in POOLED_METHODS:
                report.rows.append(_model_row(
                    rep, "pooled", pooled_models[method], pooled, dataset,
                    test_steps, "", chash, out_dir, schema))
            report.summary["stage_seconds"][f"ensembles_rep{rep}"] = (
                time.perf_counter() - started)
        except Exception as exc:
            logger.warning("repetition %s failed: %s", rep, exc)
            report.rows.append(_error_row(rep, chash, str(exc)))

    report.summary["row_count"] = len(report.rows)
    write_report(report, out_dir)
    return report


def _front_models(pool, methods=FRONT_METHODS) -> dict:
    builders = {
        ensemble.METHOD_MEAN: ensemble.mean_combine,
        ensemble.METHOD_LS: ensemble.ls_ensemble,
        ensemble.METHOD_SBS_LS: ensemble.sbs_ls,
        ensemble.METHOD_SFS_LS: ensemble.sfs_ls,
    }
    return {m: builders[m](pool) for m in methods}


def _model_row(rep, ps, model, pool, dataset, test_steps, run_seed, chash,
               out_dir, schema) -> dict:
    started = time.perf_counter()
    test_pred = ensemble.predict_ensemble(model, dataset, steps=test_steps)
    test_rmse = rmse(dataset.target[test_steps], test_pred)
    best_member = min(rmse(pool.train_targets, m.train_predictions)
                      for m in pool.members)
    tag = ps if ps == "pooled" else f"ps{ps}"
    name = f"rep{rep}_{tag}_{model.method.replace('+', '_')}.json"
    payload = ensemble.model_to_dict(model)
    payload["schema"] = dict(schema)
    with open(Path(out_dir) / "models" / name, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")
    return {
        "repetition": rep,
        "ps": ps,
        "method": model.method,
        "status": "ok",
        "train_rmse": float(model.train_rmse),
        "test_rmse": float(test_rmse),
        "n_selected": len(model.members),
        "pool_size": len(pool),
        "best_member_train_rmse": float(best_member),
        "run_seed": run_seed,
        "config_hash": chash,
        "error": "",
        "wall_clock_s": time.perf_counter() - started,
    }


def _error_row(rep, chash, message) -> dict:
    return {
        "repetition": rep, "ps": "", "method": "", "status": "error",
        "train_rmse": "", "test_rmse": "", "n_selected": "", "pool_size": "",
        "best_member_train_rmse": "", "run_seed": "", "config_hash": chash,
        "error": message, "wall_clock_s": "",
    }


def predict_file(model_path, data_path, out_path) -> Path:
    """Apply a serialized ensemble to a CSV with the training schema."""
    try:
        with open(model_path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read model {model_path}: {exc}") from exc
    schema = payload.get("schema")
    if not schema:
        raise ConfigError(f"model {model_path} carries no data schema")
    model = ensemble.model_from_dict(payload)

    dataset = data.load_csv(data_path, schema["target_column"],
                            timestamp_column=schema.get("timestamp_column"))
    if list(dataset.names) != list(schema["channel_names"]):
        raise data.DataError(
            f"data channels {list(dataset.names)} do not match model schema "
            f"{list(schema['channel_names'])}")
    req = model.required_history()
    if req >= dataset.length:
        raise data.DataError(
            f"series of length {dataset.length} is shorter than the required "
            f"history {req}")
    steps = np.arange(req, dataset.length)
    preds = ensemble.predict_ensemble(model, dataset, steps=steps)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "prediction"])
        for step, value in zip(steps, preds):
            writer.writerow([int(step), repr(float(value))])
    return out_path
