"""Real-vector encoding of a full prediction pipeline.

A candidate solution lives in [0, 1]^D and decodes into concrete pipeline
choices. Layout, for d auxiliary channels and d_p learner parameters:

    [ tw (d+1) | resolution (1) | cs (d) | fe (d+1) | fs (11*(d+1)) | learner (d_p) ]

Integer-set dimensions pick an element of their configured value set by
uniform bucketing; binary dimensions threshold at 0.5 (0.5 decodes to 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import features
from .learners import KINDS, _PARAM_ARITY


@dataclass(frozen=True)
class GenotypeSpec:
    """Search-space definition: value sets for every decoded dimension."""
    tw_sets: tuple                  # one value tuple per channel, target first
    resolution_set: tuple
    learner_kind: str
    param_sets: tuple               # one value tuple per learner parameter

    def __post_init__(self):
        object.__setattr__(self, "tw_sets", tuple(tuple(int(v) for v in s) for s in self.tw_sets))
        object.__setattr__(self, "resolution_set", tuple(int(v) for v in self.resolution_set))
        object.__setattr__(self, "param_sets", tuple(tuple(int(v) for v in s) for s in self.param_sets))
        if self.learner_kind not in KINDS:
            raise ValueError(f"unknown learner kind {self.learner_kind!r}")
        if len(self.param_sets) != _PARAM_ARITY[self.learner_kind]:
            raise ValueError(
                f"{self.learner_kind} needs {_PARAM_ARITY[self.learner_kind]} parameter sets")
        if len(self.tw_sets) < 1:
            raise ValueError("need a window set for the target channel")
        for s in (*self.tw_sets, self.resolution_set, *self.param_sets):
            if len(s) < 1:
                raise ValueError("every value set needs at least one element")

    @property
    def n_channels(self) -> int:
        return len(self.tw_sets)

    @property
    def n_aux(self) -> int:
        return self.n_channels - 1

    @property
    def dimension(self) -> int:
        c = self.n_channels
        return c + 1 + self.n_aux + c + features.N_FEATURES * c + len(self.param_sets)

    def max_history(self) -> int:
        """Largest history requirement any decodable configuration can have."""
        req = max(self.tw_sets[0]) * max(self.resolution_set)
        for s in self.tw_sets[1:]:
            req = max(req, max(s))
        return req


@dataclass(frozen=True)
class PipelineConfig:
    """A decoded genotype: every choice resolved to its actual value."""
    tw: tuple                       # window length per channel, target first
    resolution: int
    cs: tuple                       # auxiliary channel on/off
    fe: tuple                       # per channel: extract features instead of raw lags
    fs: tuple                       # per channel: 11 feature method flags
    learner_kind: str
    learner_params: tuple

    def to_dict(self) -> dict:
        return {
            "tw": list(self.tw),
            "resolution": self.resolution,
            "cs": [int(b) for b in self.cs],
            "fe": [int(b) for b in self.fe],
            "fs": [[int(b) for b in row] for row in self.fs],
            "learner_kind": self.learner_kind,
            "learner_params": list(self.learner_params),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        return cls(
            tw=tuple(int(v) for v in d["tw"]),
            resolution=int(d["resolution"]),
            cs=tuple(bool(v) for v in d["cs"]),
            fe=tuple(bool(v) for v in d["fe"]),
            fs=tuple(tuple(bool(v) for v in row) for row in d["fs"]),
            learner_kind=d["learner_kind"],
            learner_params=tuple(int(v) for v in d["learner_params"]),
        )


def random_genotype(spec: GenotypeSpec, rng) -> np.ndarray:
    """Uniform [0, 1) vector of the spec's dimension; rng may be a seed."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    return rng.random(spec.dimension)


def repair(g) -> np.ndarray:
    """Clamp every component to [0, 1]; non-finite components are an error."""
    g = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(g)):
        raise ValueError("genotype contains non-finite components")
    return np.clip(g, 0.0, 1.0)


def decode(g, spec: GenotypeSpec) -> PipelineConfig:
    g = np.asarray(g, dtype=float)
    if g.shape != (spec.dimension,):
        raise ValueError(f"genotype has dimension {g.shape}, spec wants {spec.dimension}")
    c = spec.n_channels
    pos = 0
    tw = tuple(_pick(g[pos + i], spec.tw_sets[i]) for i in range(c))
    pos += c
    resolution = _pick(g[pos], spec.resolution_set)
    pos += 1
    cs = tuple(_bit(v) for v in g[pos:pos + spec.n_aux])
    pos += spec.n_aux
    fe = tuple(_bit(v) for v in g[pos:pos + c])
    pos += c
    fs = tuple(
        tuple(_bit(v) for v in g[pos + i * features.N_FEATURES:
                                 pos + (i + 1) * features.N_FEATURES])
        for i in range(c))
    pos += features.N_FEATURES * c
    params = tuple(_pick(g[pos + k], spec.param_sets[k]) for k in range(len(spec.param_sets)))
    return PipelineConfig(
        tw=tw, resolution=resolution, cs=cs, fe=fe, fs=fs,
        learner_kind=spec.learner_kind, learner_params=params,
    )


def _pick(v: float, values: tuple):
    idx = min(int(v * len(values)), len(values) - 1)
    return values[max(idx, 0)]


def _bit(v: float) -> bool:
    return v >= 0.5
