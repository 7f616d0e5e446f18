"""Spectral analysis against a literal brute-force oracle."""

import cmath

import numpy as np
import pytest

from hypertime import (
    DAY_SECONDS,
    ResidualSeries,
    WEEK_SECONDS,
    amplitude,
    default_candidates,
    prominent_period,
    spectral_sum,
    spectrum,
)


def brute_amplitude(times, values, period):
    """Per-element evaluation of the centered exponential sum."""
    mean = sum(values) / len(values)
    acc = 0j
    for t, v in zip(times, values):
        acc += (v - mean) * cmath.exp(-2j * cmath.pi * t / period)
    return abs(acc) / len(values)


def random_series(rng, n):
    t = np.sort(rng.uniform(0, 30 * DAY_SECONDS, n))
    v = rng.normal(0, 1, n) + np.cos(2 * np.pi * t / DAY_SECONDS)
    return ResidualSeries(t, v)


def test_series_validation():
    with pytest.raises(ValueError):
        ResidualSeries(np.array([0.0, 1.0]), np.array([1.0]))
    with pytest.raises(ValueError):
        ResidualSeries(np.array([]), np.array([]))
    s = ResidualSeries(np.array([0.0, 1.0]), np.array([2.0, 4.0]))
    assert s.mean == pytest.approx(3.0)


def test_default_candidates_formula():
    np.testing.assert_allclose(default_candidates(0.0, 604800.0, 2),
                               [604800.0, 302400.0])
    np.testing.assert_allclose(default_candidates(0.0, 86400.0, 1), [86400.0])


def test_default_candidates_contains_day_and_four_hours():
    cand = default_candidates(0.0, WEEK_SECONDS, 42)
    assert 86400.0 in cand
    assert 14400.0 in cand


def test_default_candidates_duration_filter():
    cand = default_candidates(3 * DAY_SECONDS, WEEK_SECONDS, 168)
    assert max(cand) <= 3 * DAY_SECONDS
    # zero duration keeps all harmonics
    assert len(default_candidates(0.0, WEEK_SECONDS, 168)) == 168


def test_amplitude_constant_series_is_zero():
    s = ResidualSeries(np.linspace(0, 1e6, 100), np.full(100, 3.7))
    for period in (3600.0, DAY_SECONDS, WEEK_SECONDS):
        assert amplitude(s, period) == pytest.approx(0.0, abs=1e-12)


def test_amplitude_of_matched_cosine():
    t = np.linspace(0, 10 * DAY_SECONDS, 1000, endpoint=False)
    s = ResidualSeries(t, np.cos(2 * np.pi * t / DAY_SECONDS))
    assert amplitude(s, DAY_SECONDS) == pytest.approx(0.5, abs=0.02)
    assert amplitude(s, WEEK_SECONDS) < 0.1


def test_amplitude_matches_brute_force():
    rng = np.random.default_rng(17)
    for n in (1, 2, 37, 250, 500):
        s = random_series(rng, n)
        for period in (3600.0, 5000.0, DAY_SECONDS, WEEK_SECONDS):
            expect = brute_amplitude(s.times, s.values, period)
            assert amplitude(s, period) == pytest.approx(expect, abs=1e-9)


def test_spectrum_sorted_and_complete():
    rng = np.random.default_rng(4)
    s = random_series(rng, 300)
    cand = default_candidates(s.times[-1] - s.times[0], WEEK_SECONDS, 50)
    result = spectrum(s, cand)
    amps = [a for _, a in result.entries]
    assert len(result.entries) == len(cand)
    assert all(amps[i] >= amps[i + 1] for i in range(len(amps) - 1))
    assert result.entries[0][0] == DAY_SECONDS


def test_spectrum_tie_break_prefers_larger_period():
    s = ResidualSeries(np.array([0.0]), np.array([5.0]))
    result = spectrum(s, [100.0, 200.0, 50.0])
    assert all(a == 0.0 for _, a in result.entries)
    assert [p for p, _ in result.entries] == [200.0, 100.0, 50.0]


def test_prominent_period_and_exclusion():
    t = np.linspace(0, 21 * DAY_SECONDS, 2000, endpoint=False)
    s = ResidualSeries(t, np.cos(2 * np.pi * t / DAY_SECONDS))
    cand = default_candidates(21 * DAY_SECONDS, WEEK_SECONDS, 168)
    assert prominent_period(s, cand, set()) == DAY_SECONDS
    second = prominent_period(s, cand, {DAY_SECONDS})
    assert second != DAY_SECONDS
    assert second in cand
    with pytest.raises(ValueError):
        prominent_period(s, [100.0], {100.0})


def test_spectral_sum():
    t = np.linspace(0, 10 * DAY_SECONDS, 500, endpoint=False)
    s = ResidualSeries(t, np.cos(2 * np.pi * t / DAY_SECONDS))
    cand = [DAY_SECONDS, WEEK_SECONDS]
    total = spectral_sum(s, cand)
    assert total == pytest.approx(
        amplitude(s, DAY_SECONDS) + amplitude(s, WEEK_SECONDS), abs=1e-12)
    assert spectral_sum(s, [DAY_SECONDS]) == pytest.approx(
        amplitude(s, DAY_SECONDS), abs=1e-15)
    doubled = ResidualSeries(t, 2 * s.values)
    assert spectral_sum(doubled, cand) == pytest.approx(2 * total, rel=1e-12)


def test_single_sample_spectrum_is_flat_zero():
    s = ResidualSeries(np.array([123.0]), np.array([9.0]))
    result = spectrum(s, [60.0, 3600.0])
    assert all(a == 0.0 for _, a in result.entries)
