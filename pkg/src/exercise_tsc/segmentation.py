"""Repetition segmentation by peak detection on one anchor channel.

A recording of ``expected_reps`` repetitions is cut at the midpoints
between consecutive peaks of the (smoothed) anchor channel; the first and
last windows extend to the recording edges. Thresholds are relative to the
recording (length and range), so the same defaults work for magnetometer
units and for pixel coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import find_peaks

from .errors import MissingChannelError, RepCountMismatchError, ValidationError
from .series import MultivariateSeries

# anchors: right-arm magnetometer Y for IMU, left-wrist image Y for video
IMU_ANCHOR = "RA_mag_y"
VIDEO_ANCHOR = "LWrist_y"


@dataclass(frozen=True)
class SegmentationConfig:
    anchor_channel: str = IMU_ANCHOR
    expected_reps: int = 10
    min_separation_fraction: float = 0.5
    prominence_fraction: float = 0.25
    smoothing_window: int = 11

    def __post_init__(self):
        if self.expected_reps < 1:
            raise ValidationError("expected_reps must be positive")
        if not 0 < self.min_separation_fraction < 1:
            raise ValidationError("min_separation_fraction must be in (0, 1)")
        if not 0 < self.prominence_fraction < 1:
            raise ValidationError("prominence_fraction must be in (0, 1)")
        if self.smoothing_window < 1 or self.smoothing_window % 2 == 0:
            raise ValidationError("smoothing_window must be an odd positive integer")


@dataclass(frozen=True)
class SegmentBoundaries:
    boundaries: tuple
    rep_count: int

    def windows(self):
        return list(zip(self.boundaries[:-1], self.boundaries[1:]))


def smooth(channel: np.ndarray, window: int) -> np.ndarray:
    """Centred moving average; edges repeat the end samples."""
    if window <= 1:
        return np.asarray(channel, dtype=np.float64).copy()
    return uniform_filter1d(np.asarray(channel, dtype=np.float64), size=window, mode="nearest")


def detect_peaks(channel, config: SegmentationConfig = SegmentationConfig()) -> list:
    """Indices of well-separated, prominent local maxima of the smoothed channel.

    A candidate must have prominence of at least ``prominence_fraction`` of the
    smoothed channel's range. Candidates closer than
    ``min_separation_fraction * len / expected_reps`` samples are resolved
    greedily: the most prominent survives, ties go to the lower index.
    """
    x = np.asarray(channel, dtype=np.float64)
    if x.ndim != 1 or x.size < 3:
        raise ValidationError("channel must be 1-D with at least 3 samples")
    s = smooth(x, config.smoothing_window)
    span = float(s.max() - s.min())
    if not span > 0:
        return []
    # work on the range-normalised signal, quantised so that float noise from an
    # affine change of units cannot split or shift a flat-topped peak
    u = np.round((s - s.min()) / span, 9)
    candidates, props = find_peaks(u, prominence=config.prominence_fraction)
    if candidates.size == 0:
        return []
    min_sep = config.min_separation_fraction * x.size / config.expected_reps
    prominence = props["prominences"]
    # lexsort: primary key is the last one -> descending prominence, then index
    order = np.lexsort((candidates, -prominence))
    kept = []
    for i in order:
        p = candidates[i]
        if all(abs(p - q) >= min_sep for q in kept):
            kept.append(int(p))
    return sorted(kept)


def boundaries_from_peaks(peaks, length: int) -> SegmentBoundaries:
    """Cut points at the integer midpoints between consecutive peaks."""
    peaks = sorted(int(p) for p in peaks)
    cuts = [0] + [(a + b + 1) // 2 for a, b in zip(peaks[:-1], peaks[1:])] + [int(length)]
    return SegmentBoundaries(tuple(cuts), len(peaks))


def segment_repetitions(series: MultivariateSeries,
                        config: SegmentationConfig = SegmentationConfig()):
    """Split a recording into repetitions.

    Returns ``(SegmentBoundaries, [MultivariateSeries, ...])``. Raises
    :class:`RepCountMismatchError` when the detected count is off by more
    than one from ``config.expected_reps``.
    """
    if config.anchor_channel not in series.channel_names:
        raise MissingChannelError(f"anchor channel {config.anchor_channel!r} not in series")
    peaks = detect_peaks(series.channel(config.anchor_channel), config)
    if not peaks or abs(len(peaks) - config.expected_reps) > 1:
        raise RepCountMismatchError(len(peaks), config.expected_reps)
    bounds = boundaries_from_peaks(peaks, series.length)
    pieces = [series.window(a, b) for a, b in bounds.windows()]
    return bounds, pieces
