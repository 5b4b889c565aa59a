"""Core series containers, resampling, normalisation and gap repair.

Everything downstream works on :class:`MultivariateSeries`, a
``channels x time`` matrix with channel names. All functions here are pure:
they never modify their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateSeriesError, ValidationError

IMU = "imu"
VIDEO = "video"
MODALITIES = (IMU, VIDEO)

MILITARY_PRESS = "military_press"
ROWING = "rowing"

EXERCISE_CLASSES = {
    MILITARY_PRESS: ("N", "A", "R", "Arch"),
    ROWING: ("N", "A", "Ext", "R", "RB"),
}

DEFAULT_TARGET_LENGTH = 161

# channels with population std below this are treated as constant
STD_GUARD = 1e-8


@dataclass(frozen=True, eq=False)
class MultivariateSeries:
    """A ``(num_channels, length)`` matrix of finite values with channel names."""

    channel_names: tuple
    values: np.ndarray
    sample_rate_hz: Optional[float] = None

    def __post_init__(self):
        # canonical C layout: reductions (mean, std) then sum in the same order everywhere
        values = np.array(self.values, dtype=np.float64, copy=True, order="C")
        if values.ndim != 2:
            raise ValidationError(f"series values must be 2-D, got shape {values.shape}")
        names = tuple(str(n) for n in self.channel_names)
        if len(names) != values.shape[0]:
            raise ValidationError(
                f"{len(names)} channel names for {values.shape[0]} channels"
            )
        if len(set(names)) != len(names):
            raise ValidationError("channel names must be unique")
        if values.shape[1] < 2:
            raise DegenerateSeriesError(f"series length {values.shape[1]} < 2")
        if not np.all(np.isfinite(values)):
            raise ValidationError("series contains NaN or Inf")
        if self.sample_rate_hz is not None and not self.sample_rate_hz > 0:
            raise ValidationError("sample_rate_hz must be positive")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "channel_names", names)

    @property
    def num_channels(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]

    def channel(self, name: str) -> np.ndarray:
        try:
            return self.values[self.channel_names.index(name)]
        except ValueError:
            raise KeyError(name) from None

    def select(self, names: Sequence[str]) -> "MultivariateSeries":
        """Sub-series with the given channels, in the given order."""
        idx = []
        for n in names:
            if n not in self.channel_names:
                raise KeyError(n)
            idx.append(self.channel_names.index(n))
        return MultivariateSeries(tuple(names), self.values[idx], self.sample_rate_hz)

    def window(self, start: int, stop: int) -> "MultivariateSeries":
        return MultivariateSeries(
            self.channel_names, self.values[:, start:stop], self.sample_rate_hz
        )

    def __eq__(self, other):
        if not isinstance(other, MultivariateSeries):
            return NotImplemented
        return (
            self.channel_names == other.channel_names
            and self.sample_rate_hz == other.sample_rate_hz
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True)
class LabeledSample:
    """One segmented repetition."""

    series: MultivariateSeries
    label: str
    participant_id: str
    modality: str
    repetition_index: int

    def __post_init__(self):
        if not str(self.participant_id):
            raise ValidationError("participant_id must be non-empty")
        if self.modality not in MODALITIES:
            raise ValidationError(f"unknown modality {self.modality!r}")
        if self.repetition_index < 0:
            raise ValidationError("repetition_index must be non-negative")

    @property
    def key(self) -> tuple:
        return (self.participant_id, self.label, self.repetition_index)


@dataclass
class Dataset:
    samples: list = field(default_factory=list)
    exercise: str = MILITARY_PRESS
    target_length: int = DEFAULT_TARGET_LENGTH

    def __post_init__(self):
        if self.exercise not in EXERCISE_CLASSES:
            raise ValidationError(f"unknown exercise {self.exercise!r}")
        if self.target_length < 2:
            raise ValidationError("target_length must be >= 2")
        allowed = set(EXERCISE_CLASSES[self.exercise])
        for s in self.samples:
            if s.label not in allowed:
                raise ValidationError(
                    f"label {s.label!r} not in class set of {self.exercise}"
                )

    @property
    def classes(self) -> tuple:
        return EXERCISE_CLASSES[self.exercise]

    def __len__(self):
        return len(self.samples)

    @property
    def channel_names(self) -> tuple:
        if not self.samples:
            return ()
        return self.samples[0].series.channel_names

    def to_array(self) -> np.ndarray:
        """Stack samples into ``(N, channels, length)``; lengths must agree."""
        if not self.samples:
            raise ValidationError("empty dataset")
        shapes = {s.series.values.shape for s in self.samples}
        if len(shapes) != 1:
            raise ValidationError(f"samples have differing shapes: {sorted(shapes)}")
        return np.stack([s.series.values for s in self.samples])

    @property
    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=object)

    @property
    def participants(self) -> np.ndarray:
        return np.array([s.participant_id for s in self.samples], dtype=object)

    def subset(self, indices) -> "Dataset":
        return Dataset([self.samples[i] for i in indices], self.exercise, self.target_length)

    def map_series(self, fn) -> "Dataset":
        """Apply ``fn`` to every sample's series, keeping the metadata."""
        out = [
            LabeledSample(fn(s.series), s.label, s.participant_id, s.modality, s.repetition_index)
            for s in self.samples
        ]
        return Dataset(out, self.exercise, self.target_length)


def resample_linear(series: MultivariateSeries, target_length: int) -> MultivariateSeries:
    """Piecewise-linear resampling onto a uniform grid of ``target_length`` points.

    The first and last samples of every channel are kept exactly. The sample
    rate, when known, is rescaled so the recording keeps its duration.
    """
    if target_length < 2:
        raise DegenerateSeriesError(f"target_length {target_length} < 2")
    n = series.length
    if n < 2:
        raise DegenerateSeriesError(f"series length {n} < 2")
    if target_length == n:
        return series
    grid = np.linspace(0.0, n - 1, target_length)
    left = np.minimum(np.floor(grid).astype(np.int64), n - 2)
    frac = grid - left
    v = series.values
    out = v[:, left] * (1.0 - frac) + v[:, left + 1] * frac
    out[:, 0] = v[:, 0]
    out[:, -1] = v[:, -1]
    rate = None
    if series.sample_rate_hz is not None:
        rate = series.sample_rate_hz * (target_length - 1) / (n - 1)
    return MultivariateSeries(series.channel_names, out, rate)


def znormalize(series: MultivariateSeries) -> MultivariateSeries:
    """Per-channel zero mean, unit population std; flat channels map to zeros."""
    v = series.values
    mean = v.mean(axis=1, keepdims=True)
    centred = v - mean
    std = centred.std(axis=1, keepdims=True)
    flat = std[:, 0] < STD_GUARD
    std[flat] = 1.0
    out = centred / std
    out[flat] = 0.0
    return MultivariateSeries(series.channel_names, out, series.sample_rate_hz)


def repair_gaps(values: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Fill invalid entries of each row by linear interpolation in time.

    Leading and trailing gaps take the nearest observed value. A row with no
    valid entry at all becomes zeros.
    """
    values = np.asarray(values, dtype=np.float64)
    valid = np.asarray(valid, dtype=bool)
    if values.shape != valid.shape:
        raise ValidationError("values and validity mask differ in shape")
    single = values.ndim == 1
    values = np.atleast_2d(values)
    valid = np.atleast_2d(valid)
    out = values.copy()
    t = np.arange(values.shape[1])
    for r in range(values.shape[0]):
        ok = valid[r]
        if ok.all():
            continue
        if not ok.any():
            out[r] = 0.0
            continue
        # np.interp clamps to the end values outside the observed range
        out[r, ~ok] = np.interp(t[~ok], t[ok], values[r, ok])
    return out[0] if single else out
