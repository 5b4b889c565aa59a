import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exercise_tsc.errors import MissingChannelError, RepCountMismatchError, ValidationError
from exercise_tsc.segmentation import (SegmentationConfig, boundaries_from_peaks, detect_peaks,
                                       segment_repetitions)
from exercise_tsc.series import MultivariateSeries

CFG = SegmentationConfig(anchor_channel="anchor")


def sine(n=500, reps=10):
    t = np.arange(n) / n
    return np.sin(2 * np.pi * reps * t)


def recording(anchor, extra=2):
    rng = np.random.default_rng(0)
    values = np.vstack([anchor, rng.standard_normal((extra, anchor.size))])
    names = ("anchor",) + tuple(f"x{i}" for i in range(extra))
    return MultivariateSeries(names, values, 50.0)


def test_sine_peaks_at_analytic_maxima():
    peaks = detect_peaks(sine(), CFG)
    # maxima of sin(2 pi 10 t) at t = (k + 1/4) / 10, i.e. sample 12.5 + 50 k
    analytic = 12.5 + 50 * np.arange(10)
    assert len(peaks) == 10
    assert np.all(np.abs(np.array(peaks) - analytic) <= 2)


@pytest.mark.parametrize("channel", [np.linspace(0, 1, 300), np.full(300, 4.2)])
def test_no_peaks(channel):
    assert detect_peaks(channel, CFG) == []


def test_too_short_channel():
    with pytest.raises(ValidationError):
        detect_peaks([1.0, 2.0], CFG)


def test_noisy_sine_count():
    rng = np.random.default_rng(1)
    s = recording(sine() + 0.05 * rng.standard_normal(500))
    bounds, pieces = segment_repetitions(s, CFG)
    assert bounds.rep_count == 10 and len(pieces) == 10


def test_single_period():
    n = 200
    anchor = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)
    cfg = SegmentationConfig(anchor_channel="anchor", expected_reps=1)
    bounds, pieces = segment_repetitions(recording(anchor), cfg)
    assert bounds.boundaries == (0, n)
    assert pieces[0].length == n


def test_ramp_is_mismatch():
    with pytest.raises(RepCountMismatchError):
        segment_repetitions(recording(np.linspace(0, 1, 500)), CFG)


def test_off_by_one_tolerated_but_not_two():
    segment_repetitions(recording(sine(reps=9)), CFG)
    segment_repetitions(recording(sine(reps=11)), CFG)
    with pytest.raises(RepCountMismatchError):
        segment_repetitions(recording(sine(reps=8)), CFG)


def test_missing_anchor():
    with pytest.raises(MissingChannelError):
        segment_repetitions(recording(sine()), SegmentationConfig(anchor_channel="nope"))


def test_midpoint_cuts():
    b = boundaries_from_peaks([10, 30, 51], 70)
    assert b.boundaries == (0, 20, 41, 70)
    assert b.windows() == [(0, 20), (20, 41), (41, 70)]


def test_conflict_keeps_more_prominent():
    n = 400
    x = np.zeros(n)
    x[100] = 1.0
    x[110] = 0.6  # within min separation of the taller peak
    x[300] = 1.0
    cfg = SegmentationConfig(anchor_channel="a", expected_reps=2, smoothing_window=1)
    assert detect_peaks(x, cfg) == [100, 300]


@pytest.mark.parametrize("kwargs", [
    {"expected_reps": 0}, {"min_separation_fraction": 1.0}, {"prominence_fraction": 0.0},
    {"smoothing_window": 4},
])
def test_config_validation(kwargs):
    with pytest.raises(ValidationError):
        SegmentationConfig(**kwargs)


@st.composite
def anchors(draw):
    reps = draw(st.integers(2, 12))
    per = draw(st.integers(30, 60))
    n = reps * per
    noise = draw(st.floats(0, 0.1))
    seed = draw(st.integers(0, 2**32 - 1))
    x = sine(n, reps) + noise * np.random.default_rng(seed).standard_normal(n)
    return x, reps


@settings(max_examples=40, deadline=None)
@given(anchors(), st.floats(-1e3, 1e3), st.floats(1e-3, 1e3))
def test_affine_invariance(anchor, shift, scale):
    x, reps = anchor
    cfg = SegmentationConfig(anchor_channel="anchor", expected_reps=reps)
    assert detect_peaks(x + shift, cfg) == detect_peaks(x, cfg)
    assert detect_peaks(scale * x, cfg) == detect_peaks(x, cfg)


@settings(max_examples=40, deadline=None)
@given(anchors())
def test_windows_partition(anchor):
    x, reps = anchor
    cfg = SegmentationConfig(anchor_channel="anchor", expected_reps=reps)
    bounds, pieces = segment_repetitions(recording(x), cfg)
    b = np.array(bounds.boundaries)
    assert b[0] == 0 and b[-1] == x.size and np.all(np.diff(b) > 0)
    rebuilt = np.concatenate([p.values for p in pieces], axis=1)
    np.testing.assert_array_equal(rebuilt, recording(x).values)


@settings(max_examples=40, deadline=None)
@given(anchors(), st.integers(0, 2**32 - 1))
def test_close_extra_peaks_do_not_add(anchor, seed):
    x, reps = anchor
    cfg = SegmentationConfig(anchor_channel="anchor", expected_reps=reps, smoothing_window=1)
    base = detect_peaks(x, cfg)
    min_sep = cfg.min_separation_fraction * x.size / reps
    rng = np.random.default_rng(seed)
    y = x.copy()
    for p in base:
        off = int(rng.integers(1, max(2, int(min_sep) - 1)))
        q = min(p + off, x.size - 2)
        y[q] = max(y[q], x[p] * 0.9)
    assert len(detect_peaks(y, cfg)) <= len(base)
