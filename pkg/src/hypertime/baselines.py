"""Reference predictors for temporal value series.

Three families, all ignoring spatial coordinates: a global mean, a
time-of-day histogram with n intervals, and a truncated spectral
reconstruction using the strongest candidate periods.  They share the
``predict(x, t)`` contract with the full spatio-temporal models so the
evaluation code can treat every method uniformly.
"""

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, VALUED
from .spectral import (DAY_SECONDS, ResidualSeries, default_candidates,
                       spectrum)


@dataclass(frozen=True)
class BaselineConfig:
    """Which family to build and its parameter."""

    kind: str = "mean"
    n_intervals: int = 1
    m_components: int = 0

    def __post_init__(self):
        if self.kind not in ("mean", "hist", "fremen"):
            raise ValueError(f"unknown baseline kind {self.kind!r}")
        if self.n_intervals < 1:
            raise ValueError("n_intervals must be >= 1")
        if self.m_components < 0:
            raise ValueError("m_components must be >= 0")


class MeanPredictor:
    """Predicts the global training average everywhere."""

    def __init__(self, mean: float):
        self.mean = float(mean)

    def predict(self, x, t):
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.full(tt.shape, self.mean)
        return float(out[0]) if np.ndim(t) == 0 else out


class HistPredictor:
    """Time-of-day histogram with n equal intervals.

    The interval of a query is ``floor(n * (t mod 86400) / 86400)``;
    intervals that saw no training data fall back to the global mean.
    """

    def __init__(self, n: int, interval_means: np.ndarray, global_mean: float):
        self.n = int(n)
        self.interval_means = np.asarray(interval_means, dtype=float)
        self.global_mean = float(global_mean)

    def predict(self, x, t):
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        idx = np.floor(self.n * np.mod(tt, DAY_SECONDS) / DAY_SECONDS)
        idx = np.clip(idx.astype(int), 0, self.n - 1)
        out = self.interval_means[idx]
        return float(out[0]) if np.ndim(t) == 0 else out


class FremenPredictor:
    """Mean plus the m strongest periodic components of the training series.

    Stores one complex coefficient per kept period,
    ``c_k = (1/l) * sum_i (a_i - mean) * exp(-j*2*pi*t_i/T_k)``, and
    predicts ``mean + sum_k 2*Re(c_k * exp(+j*2*pi*t/T_k))``.
    """

    def __init__(self, mean: float, periods: np.ndarray, coefficients: np.ndarray):
        self.mean = float(mean)
        self.periods = np.asarray(periods, dtype=float)
        self.coefficients = np.asarray(coefficients, dtype=complex)

    def predict(self, x, t):
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.full(tt.shape, self.mean)
        for period, coef in zip(self.periods, self.coefficients):
            phase = 2.0 * np.pi * tt / period
            out += 2.0 * (coef.real * np.cos(phase) - coef.imag * np.sin(phase))
        return float(out[0]) if np.ndim(t) == 0 else out


def _require_valued(train: Dataset):
    if train.mode != VALUED:
        raise ValueError("baselines require a valued dataset")
    if len(train) == 0:
        raise ValueError("empty training set")


def mean_predictor(train: Dataset) -> MeanPredictor:
    _require_valued(train)
    return MeanPredictor(train.values.mean())


def hist_predictor(train: Dataset, n: int) -> HistPredictor:
    _require_valued(train)
    if n < 1:
        raise ValueError("n must be >= 1")
    idx = np.floor(n * np.mod(train.times, DAY_SECONDS) / DAY_SECONDS)
    idx = np.clip(idx.astype(int), 0, n - 1)
    global_mean = float(train.values.mean())
    # Per-bin np.mean keeps Hist_1 bitwise equal to the global mean.
    means = np.full(n, global_mean)
    for b in range(n):
        mask = idx == b
        if mask.any():
            means[b] = train.values[mask].mean()
    return HistPredictor(n, means, global_mean)


def fremen_predictor(train: Dataset, m: int, candidates=None) -> FremenPredictor:
    _require_valued(train)
    if m < 0:
        raise ValueError("m must be >= 0")
    if candidates is None:
        candidates = default_candidates(train.duration)
    candidates = [float(c) for c in candidates]
    if m > len(candidates):
        raise ValueError("m exceeds the number of candidate periods")
    mean = float(train.values.mean())
    if m == 0:
        return FremenPredictor(mean, np.empty(0), np.empty(0, dtype=complex))
    series = ResidualSeries(train.times, train.values)
    kept = [p for p, _ in spectrum(series, candidates).entries[:m]]
    centered = train.values - mean
    coefs = []
    for period in kept:
        phase = 2.0 * np.pi * train.times / period
        re = float(np.dot(centered, np.cos(phase))) / len(train)
        im = -float(np.dot(centered, np.sin(phase))) / len(train)
        coefs.append(complex(re, im))
    return FremenPredictor(mean, np.asarray(kept), np.asarray(coefs))


def make_baseline(train: Dataset, cfg: BaselineConfig, candidates=None):
    """Build the predictor described by `cfg`."""
    if cfg.kind == "mean":
        return mean_predictor(train)
    if cfg.kind == "hist":
        return hist_predictor(train, cfg.n_intervals)
    return fremen_predictor(train, cfg.m_components, candidates)
