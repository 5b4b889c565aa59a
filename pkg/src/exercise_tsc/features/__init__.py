"""Tabular feature strategies: handcrafted (IMU only) and the automated catalogue."""

from __future__ import annotations

import csv
import io

import numpy as np

from .._store import atomic_write_text
from ..errors import StrategyModalityError, ValidationError
from ..series import IMU, Dataset, znormalize
from .catalogue import CATALOGUE_NAMES, auto_features
from .derived import derive_imu_channels
from .handcrafted import HANDCRAFTED_NAMES, handcrafted_features

HANDCRAFTED = "handcrafted"
AUTO = "auto"
STRATEGIES = (HANDCRAFTED, AUTO)

__all__ = [
    "AUTO", "HANDCRAFTED", "CATALOGUE_NAMES", "HANDCRAFTED_NAMES",
    "auto_features", "derive_imu_channels", "handcrafted_features",
    "featurize_dataset", "featurize_series", "write_feature_csv",
]


def featurize_series(series, strategy: str, normalize: bool = True):
    """Feature vector and names for one sample."""
    if strategy == HANDCRAFTED:
        series = derive_imu_channels(series)
        feature_names, fn = HANDCRAFTED_NAMES, handcrafted_features
    elif strategy == AUTO:
        feature_names, fn = CATALOGUE_NAMES, auto_features
    else:
        raise ValidationError(f"unknown feature strategy {strategy!r}")
    if normalize:
        series = znormalize(series)
    rate = series.sample_rate_hz or 1.0
    blocks = []
    for row in series.values:
        blocks.append(fn(row, rate) if strategy == HANDCRAFTED else fn(row))
    names = [f"{ch}__{f}" for ch in series.channel_names for f in feature_names]
    return np.concatenate(blocks), names


def featurize_dataset(dataset: Dataset, strategy: str, normalize: bool = True):
    """``(X, names)`` with one row per sample and a stable column order.

    ``handcrafted`` needs IMU samples (derived orientation channels are added
    first); ``auto`` works for either modality.
    """
    if not dataset.samples:
        raise ValidationError("empty dataset")
    if strategy == HANDCRAFTED and any(s.modality != IMU for s in dataset.samples):
        raise StrategyModalityError("handcrafted features are defined for IMU data only")
    rows, names = [], None
    for s in dataset.samples:
        v, n = featurize_series(s.series, strategy, normalize)
        if names is None:
            names = n
        elif n != names:
            raise ValidationError("samples produce differing feature layouts")
        rows.append(v)
    return np.vstack(rows), names


def write_feature_csv(path, X: np.ndarray, names, index=None) -> None:
    """CSV with a header of feature names; ``index`` adds a leading ``sample`` column."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow((["sample"] if index is not None else []) + list(names))
    for i, row in enumerate(np.asarray(X)):
        lead = [index[i]] if index is not None else []
        w.writerow(lead + [repr(float(v)) for v in row])
    atomic_write_text(path, buf.getvalue())
