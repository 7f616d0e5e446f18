"""Non-uniform spectral analysis of residual series.

Works directly on irregularly sampled points: the amplitude of a
candidate period T over a series (t_i, e_i) is

    (1/l) * | sum_i (e_i - mean(e)) * exp(-j*2*pi*t_i/T) |

accumulated through real cos/sin sums, so no resampling or FFT grid is
involved and duplicate timestamps are legal.  Candidate periods default
to the integer fractions of one week, which covers the daily/weekly
structure typical of human-driven environments.
"""

from dataclasses import dataclass, field

import numpy as np

DAY_SECONDS = 86400.0
WEEK_SECONDS = 604800.0


@dataclass
class ResidualSeries:
    """Scalar series on arbitrary timestamps (duplicates allowed)."""

    times: np.ndarray
    values: np.ndarray
    mean: float = field(init=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.ndim != 1 or self.times.shape != self.values.shape:
            raise ValueError("times and values must be 1-d and equally long")
        if self.times.shape[0] == 0:
            raise ValueError("empty series")
        if not (np.all(np.isfinite(self.times)) and np.all(np.isfinite(self.values))):
            raise ValueError("non-finite entry in series")
        self.mean = float(self.values.mean())

    def __len__(self):
        return self.times.shape[0]


@dataclass(frozen=True)
class SpectrumResult:
    """Candidate periods with amplitudes, strongest first."""

    entries: tuple[tuple[float, float], ...]

    @property
    def periods(self) -> list[float]:
        return [p for p, _ in self.entries]

    @property
    def amplitudes(self) -> list[float]:
        return [a for _, a in self.entries]


def default_candidates(duration: float, longest: float = WEEK_SECONDS,
                       count: int = 168) -> list[float]:
    """Harmonic candidate set {longest/k : k = 1..count}.

    Periods longer than the observed `duration` are dropped (a cycle
    that never completes within the data cannot be told apart from a
    trend); pass ``duration=0`` to keep every harmonic.
    """
    if longest <= 0 or count < 1:
        raise ValueError("longest must be positive and count >= 1")
    periods = [longest / k for k in range(1, count + 1)]
    if duration > 0:
        periods = [p for p in periods if p <= duration]
    if not periods:
        raise ValueError("no candidate period fits within the duration")
    return periods


def _phase_sums(series: ResidualSeries, periods) -> np.ndarray:
    periods = np.asarray(periods, dtype=float)
    centered = series.values - series.mean
    # Phase matrix (l, K); cos/sin accumulation avoids complex temporaries.
    phases = (2.0 * np.pi) * np.outer(series.times, 1.0 / periods)
    re = centered @ np.cos(phases)
    im = centered @ np.sin(phases)
    return np.hypot(re, im) / len(series)


def amplitude(series: ResidualSeries, period: float) -> float:
    """Spectral amplitude of one candidate period."""
    if period <= 0:
        raise ValueError("period must be positive")
    return float(_phase_sums(series, [period])[0])


def spectrum(series: ResidualSeries, candidates) -> SpectrumResult:
    """Amplitudes of every candidate, sorted by descending amplitude.

    Ties prefer the longer period so coarse structure wins over its own
    harmonics.
    """
    candidates = [float(c) for c in candidates]
    if not candidates:
        raise ValueError("empty candidate set")
    if any(c <= 0 for c in candidates):
        raise ValueError("candidate periods must be positive")
    amps = _phase_sums(series, candidates)
    order = sorted(range(len(candidates)),
                   key=lambda i: (-amps[i], -candidates[i]))
    return SpectrumResult(tuple((candidates[i], float(amps[i])) for i in order))


def prominent_period(series: ResidualSeries, candidates, exclude=()) -> float:
    """Most prominent candidate period not yet excluded.

    Raises ``ValueError`` when every candidate is excluded.
    """
    exclude = set(float(p) for p in exclude)
    remaining = [c for c in candidates if float(c) not in exclude]
    if not remaining:
        raise ValueError("all candidate periods are excluded")
    return spectrum(series, remaining).entries[0][0]


def spectral_sum(series: ResidualSeries, candidates) -> float:
    """Sum of amplitudes over the whole candidate set.

    Scales linearly with the residual magnitude, which makes it usable
    as a coarse how-much-structure-is-left score.
    """
    candidates = [float(c) for c in candidates]
    if not candidates:
        raise ValueError("empty candidate set")
    if any(c <= 0 for c in candidates):
        raise ValueError("candidate periods must be positive")
    return float(_phase_sums(series, candidates).sum())
