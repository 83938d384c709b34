"""Decomposition-based bi-objective search over [0, 1]^D genotypes.

One run holds M scalar subproblems with evenly spaced weights on the
2-simplex. Each generation: refresh the population's diversity values and
renormalize, then per subproblem breed one child from two random neighbors
(differential step plus optional Gaussian mutation), evaluate it, and let it
take over every neighboring slot whose weighted Chebyshev cost it matches or
beats. Normalization factors adapt to the population at generation ends.

The evaluator passed to `run` must provide:

    evaluate(genotype, learner_seed) -> (f1, prediction_vector, config)
    diversity(predictions, population_matrix, exclude_row) -> f2

Diversity is recomputed for the whole population at the start of every
generation from a snapshot of the prediction matrix; children are scored
against that same snapshot.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .objectives import EvaluatedIndividual, update_factors


@dataclass(frozen=True)
class MoeadConfig:
    population_size: int
    neighborhood_size: int
    max_fes: int
    run_seed: int
    dimension: int
    mutation_sigma: np.ndarray | None = None    # default: 1/20 of the unit range

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population size must be >= 2")
        if not 2 <= self.neighborhood_size <= self.population_size:
            raise ValueError("neighborhood size must be in [2, population size]")
        if self.max_fes < self.population_size:
            raise ValueError("max_fes must cover at least the initial population")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")

    def sigma(self) -> np.ndarray:
        if self.mutation_sigma is not None:
            return np.asarray(self.mutation_sigma, dtype=float)
        return np.full(self.dimension, 0.05)


@dataclass
class ParetoFront:
    members: list
    ps: int
    run_seed: int

    def __len__(self):
        return len(self.members)

    def objectives(self) -> np.ndarray:
        return np.array([m.f for m in self.members])


def init_weights(m: int, t: int) -> tuple:
    """Evenly spaced simplex weights and T-nearest neighborhoods.

    Neighborhoods are sorted by Euclidean distance with ties broken by the
    lower subproblem index, so each contains its own index first.
    """
    if m < 2:
        raise ValueError("need at least 2 subproblems")
    lam1 = np.arange(m) / (m - 1)
    weights = np.column_stack([lam1, 1.0 - lam1])
    neighborhoods = np.empty((m, t), dtype=int)
    for i in range(m):
        d = np.linalg.norm(weights - weights[i], axis=1)
        neighborhoods[i] = np.lexsort((np.arange(m), d))[:t]
    return weights, neighborhoods


def reproduce(x_i, x_k, x_l, sigma, rng) -> np.ndarray:
    """Differential child x_i + 0.5 (x_k - x_l), mutated with probability 0.5.

    Mutation adds independent zero-mean Gaussian noise with per-dimension
    scale `sigma`; the result is clamped back into the unit box.
    """
    x_i = np.asarray(x_i, dtype=float)
    child = x_i + 0.5 * (np.asarray(x_k, dtype=float) - np.asarray(x_l, dtype=float))
    if rng.random() < 0.5:
        child = child + rng.normal(0.0, sigma)
    return np.clip(child, 0.0, 1.0)


def scalarized_cost(f_norm, lam, z_star) -> float:
    """Weighted Chebyshev distance to the reference point."""
    f_norm = np.asarray(f_norm, dtype=float)
    return float(np.max(np.asarray(lam) * np.abs(f_norm - np.asarray(z_star))))


def nondominated_mask(objectives) -> np.ndarray:
    """True for rows not dominated by any other row (minimization)."""
    F = np.asarray(objectives, dtype=float)
    if F.ndim != 2:
        raise ValueError("objectives must be a 2-d array")
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    dominated = np.any(le & lt, axis=0)
    return ~dominated


def nondominated_filter(members) -> list:
    """Nondominated subset of evaluated individuals, input order preserved.

    Exact duplicates in objective space are all retained.
    """
    if not members:
        return []
    mask = nondominated_mask([m.f for m in members])
    return [m for m, keep in zip(members, mask) if keep]


def run(config: MoeadConfig, evaluator, trace_path=None, observer=None) -> ParetoFront:
    """Execute one full search and return the nondominated final population.

    `observer`, if given, is called as observer(event, payload) on
    replacements and reference-point updates; used for diagnostics.
    """
    rng = np.random.default_rng(config.run_seed)
    m, t = config.population_size, config.neighborhood_size
    sigma = config.sigma()
    weights, neighborhoods = init_weights(m, t)

    genotypes = [rng.random(config.dimension) for _ in range(m)]
    members = []
    for i, g in enumerate(genotypes):
        seed = int(rng.integers(0, 2**63 - 1))
        try:
            f1, preds, cfg = evaluator.evaluate(g, seed)
        except Exception as exc:
            raise RuntimeError(f"evaluation failed for subproblem {i}") from exc
        members.append(EvaluatedIndividual(g, cfg, (float(f1), 0.0), np.asarray(preds, float), seed))
    fes = m
    pred_matrix = np.vstack([mem.predictions for mem in members])
    for j, mem in enumerate(members):
        mem.f = (mem.f[0], evaluator.diversity(mem.predictions, pred_matrix, j))

    raw = np.array([mem.f for mem in members])
    factors = update_factors(raw)
    trace = _TraceWriter(trace_path, m) if trace_path else None
    if trace:
        trace.row(0, fes, raw.min(axis=0), factors, raw)

    generation = 0
    while fes < config.max_fes:
        generation += 1
        snapshot = np.vstack([mem.predictions for mem in members])
        for j, mem in enumerate(members):
            mem.f = (mem.f[0], evaluator.diversity(mem.predictions, snapshot, j))
        raw = np.array([mem.f for mem in members])
        f_norm = raw / factors
        z_star = f_norm.min(axis=0)
        if observer:
            observer("zstar", {"generation": generation, "values": z_star.copy()})

        for i in range(m):
            k, l = rng.choice(neighborhoods[i], size=2, replace=False)
            child = reproduce(members[i].genotype, members[k].genotype,
                              members[l].genotype, sigma, rng)
            seed = int(rng.integers(0, 2**63 - 1))
            try:
                f1_c, preds_c, cfg_c = evaluator.evaluate(child, seed)
            except Exception as exc:
                raise RuntimeError(f"evaluation failed for subproblem {i}") from exc
            preds_c = np.asarray(preds_c, dtype=float)
            f2_c = evaluator.diversity(preds_c, snapshot, None)
            fes += 1
            raw_c = (float(f1_c), float(f2_c))
            norm_c = np.asarray(raw_c) / factors
            for i_s in neighborhoods[i]:
                incumbent_cost = scalarized_cost(f_norm[i_s], weights[i_s], z_star)
                child_cost = scalarized_cost(norm_c, weights[i_s], z_star)
                if child_cost <= incumbent_cost:
                    members[i_s] = EvaluatedIndividual(child.copy(), cfg_c, raw_c,
                                                       preds_c, seed)
                    raw[i_s] = raw_c
                    f_norm[i_s] = norm_c
                    if observer:
                        observer("replacement", {
                            "generation": generation, "subproblem": int(i_s),
                            "old_cost": incumbent_cost, "new_cost": child_cost,
                        })
            improved = norm_c < z_star
            if np.any(improved):
                z_star = np.where(improved, norm_c, z_star)
                if observer:
                    observer("zstar", {"generation": generation, "values": z_star.copy()})

        factors = update_factors(raw)
        if trace:
            trace.row(generation, fes, z_star, factors, raw)

    if trace:
        trace.close()
    # refresh diversity one last time so the front is filtered on coherent
    # population-coupled objectives, not on candidate-time values
    final = np.vstack([mem.predictions for mem in members])
    for j, mem in enumerate(members):
        mem.f = (mem.f[0], evaluator.diversity(mem.predictions, final, j))
    return ParetoFront(members=nondominated_filter(members), ps=m, run_seed=config.run_seed)


class _TraceWriter:
    """Optional per-generation CSV trace of the run state."""

    def __init__(self, path, m: int):
        self._fh = open(path, "w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._fh)
        header = ["generation", "fes", "zstar1", "zstar2", "factor1", "factor2"]
        header += [f"f1_{i}" for i in range(m)] + [f"f2_{i}" for i in range(m)]
        self._writer.writerow(header)

    def row(self, generation, fes, z_star, factors, raw):
        vals = [generation, fes, repr(float(z_star[0])), repr(float(z_star[1])),
                repr(float(factors[0])), repr(float(factors[1]))]
        vals += [repr(float(v)) for v in raw[:, 0]] + [repr(float(v)) for v in raw[:, 1]]
        self._writer.writerow(vals)

    def close(self):
        self._fh.close()
