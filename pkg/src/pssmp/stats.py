"""Distribution comparison statistics used by the harness and diagnostics."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np


def _clean(sample) -> np.ndarray:
    a = np.asarray(sample, dtype=float).ravel()
    if a.size == 0:
        raise ValueError("sample is empty")
    return a


def ks_distance(a, b) -> float:
    """Kolmogorov-Smirnov statistic.

    ``b`` is either a second sample (two-sample statistic) or a callable CDF
    (one-sample statistic).
    """
    a = np.sort(_clean(a))
    if callable(b):
        m = a.size
        # sup over each gap between sample points is attained at its ends;
        # left limits of both CDFs are compared at the point below each atom
        cdf = np.asarray(b(a), dtype=float)
        cdf_left = np.asarray(b(np.nextafter(a, -np.inf)), dtype=float)
        hi = np.searchsorted(a, a, side="right") / m
        lo = np.searchsorted(a, a, side="left") / m
        return float(max(np.max(np.abs(hi - cdf)), np.max(np.abs(lo - cdf_left))))
    b = np.sort(_clean(b))
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def uniform_cdf(u):
    return np.clip(u, 0.0, 1.0)


def hill_tail_index(sample, k: int) -> float:
    """Hill estimate of the tail index from the top ``k`` positive values."""
    a = np.asarray(sample, dtype=float).ravel()
    pos = a[a > 0]
    if k < 1:
        raise ValueError("k must be at least 1")
    if pos.size < k + 1:
        raise ValueError(f"need at least {k + 1} positive values, got {pos.size}")
    top = np.sort(pos)[-(k + 1):]
    logs = np.log(top)
    return float(1.0 / np.mean(logs[1:] - logs[0]))


class TrimRule(str, Enum):
    NONE = "none"
    PAPER_98 = "paper_98"


@dataclass(frozen=True)
class HistogramSpec:
    """Bin layout; with ``paper_98`` the bounds come from the 1% / 99% quantiles."""

    bin_count: int = 60
    trim_rule: TrimRule = TrimRule.PAPER_98
    lower: float | None = None
    upper: float | None = None


@dataclass(frozen=True)
class HistogramPair:
    edges: np.ndarray
    counts_a: np.ndarray
    counts_b: np.ndarray
    lower: float
    upper: float


def trimmed_histogram(a, b, spec: HistogramSpec = HistogramSpec()) -> HistogramPair:
    """Histograms of two samples on shared bins; values outside the bounds are dropped.

    Quantiles use linear interpolation (numpy's default, Hyndman-Fan type 7).
    """
    a, b = _clean(a), _clean(b)
    if spec.bin_count < 1:
        raise ValueError("bin_count must be positive")
    rule = TrimRule(spec.trim_rule)
    if spec.lower is not None and spec.upper is not None:
        lower, upper = float(spec.lower), float(spec.upper)
    elif rule is TrimRule.PAPER_98:
        lower = float(min(np.quantile(a, 0.01), np.quantile(b, 0.01)))
        upper = float(max(np.quantile(a, 0.99), np.quantile(b, 0.99)))
    else:
        lower = float(min(a.min(), b.min()))
        upper = float(max(a.max(), b.max()))
    if upper == lower:
        # degenerate data: one bin centred on the value
        lower, upper = lower - 0.5, upper + 0.5
    edges = np.linspace(lower, upper, spec.bin_count + 1)
    ca, _ = np.histogram(a, bins=edges)
    cb, _ = np.histogram(b, bins=edges)
    return HistogramPair(edges, ca, cb, lower, upper)


def normal_cdf(scale: float = 1.0) -> Callable:
    from scipy.special import ndtr

    return lambda v: ndtr(np.asarray(v) / scale)
