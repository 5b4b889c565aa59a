"""Eighteen time- and frequency-domain statistics per signal.

Order is fixed (see ``HANDCRAFTED_NAMES``). Spectral quantities use the
one-sided DFT power with the DC bin dropped. Degenerate cases never emit
NaN: a flat signal has zero std, skewness, kurtosis, autocorrelation,
dominant frequency, centroid and spectral entropy.
"""

from __future__ import annotations

import numpy as np

from ..errors import TooShortError, ValidationError

MIN_LENGTH = 8

HANDCRAFTED_NAMES = (
    "mean", "std", "skewness", "kurtosis", "min", "max", "range", "median",
    "p25", "p75", "iqr", "rms", "energy", "mean_crossings", "autocorr_lag1",
    "dominant_freq", "spectral_centroid", "spectral_entropy",
)

_FLAT = 1e-12


def _spectrum(centred: np.ndarray, sample_rate_hz: float):
    power = np.abs(np.fft.rfft(centred)) ** 2
    freqs = np.fft.rfftfreq(centred.size, d=1.0 / sample_rate_hz)
    return freqs[1:], power[1:]


def handcrafted_features(signal, sample_rate_hz: float = 1.0) -> np.ndarray:
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise ValidationError("signal must be 1-D")
    if x.size < MIN_LENGTH:
        raise TooShortError(f"signal length {x.size} < {MIN_LENGTH}")
    if not sample_rate_hz > 0:
        raise ValidationError("sample_rate_hz must be positive")
    n = x.size
    mean = x.mean()
    c = x - mean
    var = np.mean(c * c)
    std = np.sqrt(var)
    flat = std <= _FLAT * max(1.0, abs(mean))
    if flat:
        skew = kurt = ac1 = 0.0
    else:
        z = c / std
        skew = np.mean(z ** 3)
        kurt = np.mean(z ** 4) - 3.0
        ac1 = np.sum(c[:-1] * c[1:]) / np.sum(c * c)
    lo, hi = x.min(), x.max()
    p25, med, p75 = np.percentile(x, [25, 50, 75])
    energy = np.mean(x * x)
    sign = np.sign(c)
    crossings = 0 if flat else int(np.count_nonzero(sign[:-1] * sign[1:] < 0))

    freqs, power = _spectrum(c, sample_rate_hz)
    total = power.sum()
    if flat or freqs.size == 0 or not total > 0:
        dom = centroid = entropy = 0.0
    else:
        # relative quantisation makes near-ties resolve to the lowest frequency
        dom = freqs[np.argmax(np.round(power / power.max(), 9))]
        centroid = np.sum(freqs * power) / total
        p = power / total
        nz = p[p > 0]
        entropy = -np.sum(nz * np.log(nz)) / np.log(p.size) if p.size > 1 else 0.0

    return np.array([
        mean, std, skew, kurt, lo, hi, hi - lo, med, p25, p75, p75 - p25,
        np.sqrt(energy), energy, crossings, ac1, dom, centroid, entropy,
    ], dtype=np.float64)
