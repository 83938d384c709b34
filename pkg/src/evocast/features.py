"""Per-segment feature bank: summary statistics, Haar decomposition levels,
and piecewise-linear fits.

Eleven switchable features per channel segment, in canonical order:

    mean, max, min, std, haar level 1..4, pla with 2/3/4 pieces

All feature functions also come in a batched form operating on a stack of
equal-length segments (rows), which is what the sample builder uses.
"""

from __future__ import annotations

import numpy as np

FEATURE_NAMES = (
    "mean", "max", "min", "std",
    "haar1", "haar2", "haar3", "haar4",
    "pla2", "pla3", "pla4",
)
N_FEATURES = len(FEATURE_NAMES)

_SQRT2 = np.sqrt(2.0)
# pla feature index -> number of line pieces
_PLA_PIECES = {8: 2, 9: 3, 10: 4}
_HAAR_LEVELS = {4: 1, 5: 2, 6: 3, 7: 4}


def stat_features(segment) -> np.ndarray:
    """Return (mean, max, min, std) of a segment; std is the population one."""
    seg = _as_segment(segment, min_len=1, what="stat_features")
    return np.array([seg.mean(), seg.max(), seg.min(), seg.std()])


def wavelet_features(segment, level: int) -> np.ndarray:
    """Haar approximation coefficients after `level` cascade steps.

    Each step averages adjacent pairs scaled by sqrt(2); odd-length inputs
    are extended by repeating the last value before pairing.
    """
    if not 1 <= level <= 4:
        raise ValueError(f"haar level must be in 1..4, got {level}")
    seg = _as_segment(segment, min_len=2, what="wavelet_features")
    return _haar_matrix(seg[None, :], level)[0]


def pla_features(segment, k: int) -> np.ndarray:
    """Fit k contiguous least-squares lines; returns (slope, intercept) per piece.

    Pieces have near-equal length with the remainder given to the leading
    pieces; lines are fit against within-piece positions 0..m-1.
    """
    if k not in (2, 3, 4):
        raise ValueError(f"pla piece count must be in {{2, 3, 4}}, got {k}")
    seg = _as_segment(segment, min_len=2 * k, what=f"pla_features(k={k})")
    return _pla_matrix(seg[None, :], k)[0]


def extract(segment, flags) -> np.ndarray:
    """Concatenate the enabled features of a segment in canonical order.

    With no flag enabled the raw segment is returned unchanged.
    """
    flags = _check_flags(flags)
    seg = _as_segment(segment, min_len=1, what="extract")
    if not any(flags):
        return seg.copy()
    return extract_matrix(seg[None, :], flags)[0]


def extract_matrix(windows: np.ndarray, flags) -> np.ndarray:
    """Batched `extract`: one row of features per row of `windows`."""
    flags = _check_flags(flags)
    W = np.asarray(windows, dtype=float)
    if W.ndim != 2 or W.shape[1] < 1:
        raise ValueError("windows must be a non-empty 2-d stack of segments")
    n = W.shape[1]
    if not any(flags):
        return W.copy()
    parts = []
    for idx, on in enumerate(flags):
        if not on:
            continue
        if idx == 0:
            parts.append(W.mean(axis=1, keepdims=True))
        elif idx == 1:
            parts.append(W.max(axis=1, keepdims=True))
        elif idx == 2:
            parts.append(W.min(axis=1, keepdims=True))
        elif idx == 3:
            parts.append(W.std(axis=1, keepdims=True))
        elif idx in _HAAR_LEVELS:
            if n < 2:
                raise ValueError("haar features need segment length >= 2")
            parts.append(_haar_matrix(W, _HAAR_LEVELS[idx]))
        else:
            k = _PLA_PIECES[idx]
            if n < 2 * k:
                raise ValueError(f"pla with {k} pieces needs segment length >= {2 * k}")
            parts.append(_pla_matrix(W, k))
    return np.hstack(parts)


def extract_width(flags, length: int) -> int:
    """Width of the extract() output for the given flags and segment length."""
    flags = _check_flags(flags)
    if not any(flags):
        return length
    width = 0
    for idx, on in enumerate(flags):
        if not on:
            continue
        if idx < 4:
            width += 1
        elif idx in _HAAR_LEVELS:
            width += _haar_width(length, _HAAR_LEVELS[idx])
        else:
            width += 2 * _PLA_PIECES[idx]
    return width


def feasible_flags(flags, length: int) -> tuple:
    """Mask off flags whose method cannot run on a segment of this length."""
    flags = _check_flags(flags)
    out = []
    for idx, on in enumerate(flags):
        if on and idx in _HAAR_LEVELS and length < 2:
            on = False
        if on and idx in _PLA_PIECES and length < 2 * _PLA_PIECES[idx]:
            on = False
        out.append(bool(on))
    return tuple(out)


def _haar_width(length: int, level: int) -> int:
    n = length
    for _ in range(level):
        n = max(1, (n + 1) // 2)
    return n


def _haar_matrix(W: np.ndarray, level: int) -> np.ndarray:
    for _ in range(level):
        if W.shape[1] % 2:
            W = np.hstack([W, W[:, -1:]])
        W = (W[:, 0::2] + W[:, 1::2]) / _SQRT2
    return W


def _pla_matrix(W: np.ndarray, k: int) -> np.ndarray:
    n = W.shape[1]
    base, rem = divmod(n, k)
    sizes = [base + 1] * rem + [base] * (k - rem)
    cols = []
    start = 0
    for m in sizes:
        piece = W[:, start:start + m]
        pos = np.arange(m, dtype=float)
        pos_c = pos - pos.mean()
        slope = piece @ pos_c / (pos_c @ pos_c)
        intercept = piece.mean(axis=1) - slope * pos.mean()
        cols.append(slope)
        cols.append(intercept)
        start += m
    return np.column_stack(cols)


def _as_segment(segment, min_len: int, what: str) -> np.ndarray:
    seg = np.asarray(segment, dtype=float)
    if seg.ndim != 1 or seg.size < min_len:
        raise ValueError(f"{what} needs a 1-d segment of length >= {min_len}")
    return seg


def _check_flags(flags) -> tuple:
    flags = tuple(bool(f) for f in flags)
    if len(flags) != N_FEATURES:
        raise ValueError(f"expected {N_FEATURES} feature flags, got {len(flags)}")
    return flags
