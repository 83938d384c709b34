"""Multivariate time-series ingestion and supervised sample construction.

A dataset is a set of aligned real-valued channels; channel 0 by convention
holds nothing special, the prediction target is whichever channel
`target_index` points at. Samples are one-step-ahead: the input summarizes
history up to step t, the target is the target channel at step t+1.

The target history enters at a configurable resolution r: the last tw*r raw
values ending at t are reduced to tw non-overlapping block means, so the
freshest observations always participate. Auxiliary channels contribute raw
lag windows or extracted features, per the pipeline configuration.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import features


class DataError(ValueError):
    """Raised for unusable input files or malformed series."""


@dataclass
class TimeSeriesDataset:
    """Aligned multivariate series: one row per channel, equal lengths."""
    names: tuple
    channels: np.ndarray            # shape (n_channels, length)
    target_index: int
    timestamps: np.ndarray | None = None
    dropped_rows: int = 0

    def __post_init__(self):
        self.channels = np.asarray(self.channels, dtype=float)
        if self.channels.ndim != 2 or self.channels.shape[0] != len(self.names):
            raise DataError("channels must be one row per channel name")
        if self.length < 2:
            raise DataError("dataset needs at least 2 time steps")
        if not np.all(np.isfinite(self.channels)):
            raise DataError("dataset contains non-finite values")
        if not 0 <= self.target_index < self.n_channels:
            raise DataError(f"target_index {self.target_index} out of range")
        if self.timestamps is not None:
            self.timestamps = np.asarray(self.timestamps, dtype=float)
            if self.timestamps.size != self.length:
                raise DataError("timestamps must match series length")
            if np.any(np.diff(self.timestamps) < 0):
                raise DataError("timestamps must be monotone non-decreasing")

    @property
    def n_channels(self) -> int:
        return self.channels.shape[0]

    @property
    def length(self) -> int:
        return self.channels.shape[1]

    @property
    def target(self) -> np.ndarray:
        return self.channels[self.target_index]


@dataclass
class SampleMatrix:
    """Supervised design matrix plus a map from columns back to channels."""
    inputs: np.ndarray              # (s, width)
    targets: np.ndarray             # (s,)
    steps: np.ndarray               # target time step of each sample
    feature_layout: tuple = field(default_factory=tuple)   # (channel, offset, width)

    def __post_init__(self):
        if self.inputs.ndim != 2 or self.inputs.shape[0] < 1:
            raise DataError("sample matrix needs at least one sample")
        if not np.all(np.isfinite(self.inputs)):
            raise DataError("sample inputs contain non-finite values")
        if sum(w for _, _, w in self.feature_layout) != self.inputs.shape[1]:
            raise DataError("feature_layout widths do not sum to input width")


def load_csv(path, target_column: str, timestamp_column: str | None = None) -> TimeSeriesDataset:
    """Load a headered CSV into a dataset, dropping unparseable rows.

    Every non-timestamp column becomes a channel. Rows where any kept cell
    fails to parse as a number (or is empty) are dropped and counted in
    `dropped_rows`; rows with the wrong number of cells are an error.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise DataError(f"{path} has no header row")
    header = [h.strip() for h in rows[0]]
    if target_column not in header:
        raise DataError(f"target column {target_column!r} not in header {header}")
    ts_pos = None
    if timestamp_column is not None:
        if timestamp_column not in header:
            raise DataError(f"timestamp column {timestamp_column!r} not in header")
        ts_pos = header.index(timestamp_column)
    keep = [i for i in range(len(header)) if i != ts_pos]
    names = [header[i] for i in keep]
    if len(names) < 2:
        raise DataError("need a target plus at least one auxiliary channel")

    parsed, stamps, dropped = [], [], 0
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"row {lineno} has {len(row)} cells, expected {len(header)}")
        try:
            values = [float(row[i]) for i in keep]
            stamp = float(row[ts_pos]) if ts_pos is not None else None
        except ValueError:
            dropped += 1
            continue
        if not all(np.isfinite(v) for v in values):
            dropped += 1
            continue
        parsed.append(values)
        stamps.append(stamp)
    if len(parsed) < 2:
        raise DataError(f"{path} has fewer than 2 usable rows ({dropped} dropped)")
    channels = np.asarray(parsed, dtype=float).T
    timestamps = np.asarray(stamps, dtype=float) if ts_pos is not None else None
    return TimeSeriesDataset(
        names=tuple(names),
        channels=channels,
        target_index=names.index(target_column),
        timestamps=timestamps,
        dropped_rows=dropped,
    )


def aggregate_resolution(series, r: int) -> np.ndarray:
    """Non-overlapping block means of width r; a trailing partial block is dropped."""
    series = np.asarray(series, dtype=float)
    if series.ndim != 1:
        raise DataError("series must be 1-d")
    r = int(r)
    if r < 1:
        raise DataError(f"resolution must be >= 1, got {r}")
    if r > series.size:
        raise DataError(f"resolution {r} exceeds series length {series.size}")
    n = series.size // r
    return series[: n * r].reshape(n, r).mean(axis=1)


def config_history(config) -> int:
    """Raw steps of history a pipeline configuration needs before its first sample."""
    req = config.tw[0] * config.resolution
    for j, on in enumerate(config.cs):
        if on:
            req = max(req, config.tw[j + 1])
    return req


def build_samples(dataset: TimeSeriesDataset, config, steps=None, fx=None) -> SampleMatrix:
    """Build one-step-ahead samples for a pipeline configuration.

    `steps` selects which target time steps to realize (default: every step
    the configuration can reach). Passing `fx` swaps in another feature
    extractor (segment, flags) -> vector; the default is the batched
    built-in, and both produce identical values.
    """
    L = dataset.length
    req = config_history(config)
    if req >= L:
        raise DataError(f"windows need {req} steps of history but series has {L}")
    if steps is None:
        steps = np.arange(req, L)
    else:
        steps = np.asarray(steps, dtype=int)
        if steps.size == 0:
            raise DataError("no sample steps requested")
        if steps.min() < req or steps.max() >= L:
            raise DataError("requested steps leave insufficient history for this config")
    t = steps - 1

    target = dataset.target
    tw0, r = config.tw[0], config.resolution
    # block mean of the r raw values ending at each index, end-anchored at t
    win = np.lib.stride_tricks.sliding_window_view(target, r)
    block_mean = win.mean(axis=1)                      # index j-(r-1) holds mean ending at j
    ends = t[:, None] - r * np.arange(tw0 - 1, -1, -1)[None, :]
    parts = [block_mean[ends - (r - 1)]]
    layout = [(dataset.target_index, 0, tw0)]

    offset = tw0
    aux_order = [j for j in range(dataset.n_channels) if j != dataset.target_index]
    for pos, chan in enumerate(aux_order):
        if not config.cs[pos]:
            continue
        tw = config.tw[pos + 1]
        segs = np.lib.stride_tricks.sliding_window_view(dataset.channels[chan], tw)
        block = segs[t - tw + 1]
        if config.fe[pos + 1]:
            flags = features.feasible_flags(config.fs[pos + 1], tw)
            if fx is None:
                block = features.extract_matrix(block, flags) if any(flags) else block.copy()
            else:
                block = np.asarray([fx(row, flags) for row in block], dtype=float)
        parts.append(block)
        layout.append((chan, offset, block.shape[1]))
        offset += block.shape[1]

    return SampleMatrix(
        inputs=np.hstack(parts),
        targets=target[steps].copy(),
        steps=steps.copy(),
        feature_layout=tuple(layout),
    )


def config_width(config, target_index: int = 0, n_channels: int | None = None) -> int:
    """Input width build_samples will produce for this configuration."""
    width = config.tw[0]
    for pos, on in enumerate(config.cs):
        if not on:
            continue
        tw = config.tw[pos + 1]
        if config.fe[pos + 1]:
            width += features.extract_width(features.feasible_flags(config.fs[pos + 1], tw), tw)
        else:
            width += tw
    return width


def split_train_test(dataset: TimeSeriesDataset, train_fraction: float, seed: int,
                     history: int) -> tuple:
    """Randomly partition the reachable target steps into train and test.

    `history` is the largest history requirement over the whole search
    space, so every candidate configuration shares one sample alignment.
    Returns sorted (train_steps, test_steps).
    """
    if not 0.0 < train_fraction < 1.0:
        raise DataError(f"train fraction must be in (0, 1), got {train_fraction}")
    if history < 1 or history >= dataset.length - 1:
        raise DataError(f"history {history} leaves no samples for length {dataset.length}")
    steps = np.arange(history, dataset.length)
    n_train = int(round(steps.size * train_fraction))
    if not 1 <= n_train <= steps.size - 1:
        raise DataError("split leaves an empty train or test part")
    perm = np.random.default_rng(seed).permutation(steps)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])
