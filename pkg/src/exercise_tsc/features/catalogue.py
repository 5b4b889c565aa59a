"""Automated catalogue: 22 canonical time-series statistics per signal.

The set follows the spirit of the catch22 collection (distribution shape,
linear and nonlinear autocorrelation, outlier timing, simple forecasting
error, symbolic motifs, fluctuation scaling, spectral shape) with compact
definitions of our own. Every statistic is computed on the z-scored signal
``z`` (population std; a flat signal becomes all zeros), so the catalogue is
invariant to offset and positive scale. Non-finite results are reported as 0.

``acf`` below is the biased autocorrelation ``sum(z[t] z[t+k]) / sum(z**2)``.

==  ==========================  ==================================================
 #  name                        definition
==  ==========================  ==================================================
 1  hist_mode_5                 centre of fullest of 5 equal-width bins of z
 2  hist_mode_10                same with 10 bins
 3  acf_lag1                    acf(1)
 4  acf_first_1e                first lag where acf < 1/e, linearly interpolated
 5  acf_first_min               first lag that is a local minimum of acf
 6  outlier_timing_pos          median over thresholds 0, 0.01, ... of the
                                median position (scaled to [-1, 1]) of samples
                                with z >= threshold; thresholds with fewer than
                                max(2, 2% of n) exceedances are skipped
 7  outlier_timing_neg          same for -z
 8  trev                        mean((z[t+1] - z[t]) ** 3)
 9  pnn40                       fraction of successive |dz| > 0.04
10  longest_above_mean          longest run of z > 0
11  longest_decrease            longest run of strictly negative dz
12  motif3_entropy              Shannon entropy (nats) of consecutive symbol
                                pairs after 3-level equiprobable symbolisation
13  embed2_dist_cv              coefficient of variation of step lengths in the
                                delay embedding (z[t], z[t+tau]),
                                tau = ceil(acf_first_1e)
14  hist_ami_lag2               mutual information (nats) of (z[t], z[t+2]) on a
                                5 x 5 equal-width histogram
15  gaussian_ami_first_min      first local minimum over lags 1..min(40, n/2) of
                                -0.5 log(1 - acf(k)**2)
16  forecast_mean3_stderr       std of residuals of the 3-sample running-mean
                                forecast
17  forecast_mean1_tauresrat    acf_first_1e of one-step-naive residuals divided
                                by acf_first_1e of z
18  periodicity_lag             first acf peak after the first acf trough with
                                peak - trough > 0.01 and peak > 0.01 (0 if none)
19  spectral_median_freq        angular frequency (rad/sample) below which half
                                the non-DC periodogram power lies
20  low_power_fraction          share of non-DC power in the lowest fifth of bins
21  transition_sumdiagcov       trace of the column covariance of the 3-state
                                transition matrix of z[::tau] symbolised
                                equiprobably
22  dfa_alpha                   detrended fluctuation analysis slope of
                                log F(s) on log s over window sizes 4..n/4
==  ==========================  ==================================================
"""

from __future__ import annotations

import bisect
import math

import numpy as np

from ..errors import TooShortError, ValidationError

MIN_LENGTH = 8

CATALOGUE_NAMES = (
    "hist_mode_5", "hist_mode_10", "acf_lag1", "acf_first_1e", "acf_first_min",
    "outlier_timing_pos", "outlier_timing_neg", "trev", "pnn40",
    "longest_above_mean", "longest_decrease", "motif3_entropy", "embed2_dist_cv",
    "hist_ami_lag2", "gaussian_ami_first_min", "forecast_mean3_stderr",
    "forecast_mean1_tauresrat", "periodicity_lag", "spectral_median_freq",
    "low_power_fraction", "transition_sumdiagcov", "dfa_alpha",
)


def zscore(x: np.ndarray) -> np.ndarray:
    c = x - x.mean()
    sd = c.std()
    if sd < 1e-8:
        return np.zeros_like(c)
    # quantise so offset/scale changes of the raw signal give bit-identical z
    return np.round(c / sd, 12)


def autocorr(z: np.ndarray) -> np.ndarray:
    """Biased autocorrelation for lags ``0..n-1`` (all zeros for a zero signal)."""
    n = z.size
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(z, size)
    ac = np.fft.irfft(f * np.conj(f), size)[:n]
    if ac[0] <= 0:
        return np.zeros(n)
    return ac / ac[0]


def hist_mode(z: np.ndarray, bins: int) -> float:
    counts, edges = np.histogram(z, bins=bins)
    i = int(np.argmax(counts))
    return 0.5 * (edges[i] + edges[i + 1])


def first_below(ac: np.ndarray, level: float) -> float:
    for k in range(1, ac.size):
        if ac[k] < level:
            # interpolate the crossing between k-1 and k
            return k - 1 + (ac[k - 1] - level) / (ac[k - 1] - ac[k])
    return float(ac.size)


def first_local_min(v: np.ndarray, start: int = 1) -> int:
    for k in range(start, v.size - 1):
        if v[k] < v[k - 1] and v[k] < v[k + 1]:
            return k
    return v.size


def outlier_timing(z: np.ndarray) -> float:
    n = z.size
    top = z.max()
    if not top > 0:
        return 0.0
    need = max(2, int(math.ceil(0.02 * n)))
    # samples above a threshold are a prefix of the descending sort, so one pass
    # of running medians over that order serves every threshold
    order = np.argsort(-z, kind="stable")
    counts = np.searchsorted(-z[order], -np.arange(0.0, top, 0.01), side="right")
    counts = counts[: np.argmax(counts < need)] if np.any(counts < need) else counts
    if counts.size == 0:
        return 0.0
    seen, medians = [], np.empty(n + 1)
    for m, pos in enumerate(order.tolist(), start=1):
        bisect.insort(seen, pos)
        h = m // 2
        medians[m] = seen[h] if m % 2 else 0.5 * (seen[h - 1] + seen[h])
    positions = medians[counts] / (n / 2.0) - 1.0
    return float(np.median(positions))


def longest_run(mask: np.ndarray) -> int:
    if not mask.any():
        return 0
    padded = np.concatenate([[False], mask, [False]]).astype(np.int8)
    d = np.diff(padded)
    return int(np.max(np.flatnonzero(d == -1) - np.flatnonzero(d == 1)))


def symbolise(z: np.ndarray, levels: int) -> np.ndarray:
    """Equiprobable symbols by rank (ties resolved by position)."""
    ranks = np.argsort(np.argsort(z, kind="stable"), kind="stable")
    return (ranks * levels) // z.size


def pair_entropy(sym: np.ndarray, levels: int) -> float:
    if sym.size < 2:
        return 0.0
    counts = np.bincount(sym[:-1] * levels + sym[1:], minlength=levels * levels)
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log(p)))


def mutual_information(a: np.ndarray, b: np.ndarray, bins: int) -> float:
    lo, hi = min(a.min(), b.min()), max(a.max(), b.max())
    if not hi > lo:
        return 0.0
    joint, _, _ = np.histogram2d(a, b, bins=bins, range=[[lo, hi], [lo, hi]])
    pj = joint / joint.sum()
    pa = pj.sum(axis=1, keepdims=True)
    pb = pj.sum(axis=0, keepdims=True)
    nz = pj > 0
    return float(np.sum(pj[nz] * np.log(pj[nz] / (pa @ pb)[nz])))


def periodicity_lag(ac: np.ndarray) -> int:
    trough = None
    for k in range(1, ac.size - 1):
        if trough is None:
            if ac[k] < ac[k - 1] and ac[k] <= ac[k + 1]:
                trough = ac[k]
        elif ac[k] > ac[k - 1] and ac[k] >= ac[k + 1]:
            if ac[k] > 0.01 and ac[k] - trough > 0.01:
                return k
            trough = min(trough, ac[k])
        else:
            trough = min(trough, ac[k])
    return 0


def transition_sumdiagcov(z: np.ndarray, tau: int) -> float:
    y = z[::max(1, tau)]
    if y.size < 3:
        return 0.0
    sym = symbolise(y, 3)
    t = np.zeros((3, 3))
    np.add.at(t, (sym[:-1], sym[1:]), 1.0)
    t /= t.sum()
    return float(np.trace(np.cov(t, rowvar=False)))


def dfa_alpha(z: np.ndarray) -> float:
    n = z.size
    profile = np.cumsum(z - z.mean())
    sizes = np.unique(np.floor(np.logspace(np.log10(4), np.log10(max(4, n // 4)), 10)).astype(int))
    sizes = sizes[(sizes >= 4) & (sizes <= n // 4)]
    if sizes.size < 2:
        return 0.0
    fluct = []
    for s in sizes:
        m = n // s
        seg = profile[: m * s].reshape(m, s)
        t = np.arange(s, dtype=np.float64)
        tc = t - t.mean()
        slope = (seg - seg.mean(axis=1, keepdims=True)) @ tc / (tc @ tc)
        resid = seg - seg.mean(axis=1, keepdims=True) - slope[:, None] * tc
        fluct.append(np.sqrt(np.mean(resid ** 2)))
    fluct = np.asarray(fluct)
    # residuals at rounding level (piecewise-linear profiles) carry no scaling information
    if np.any(fluct <= 1e-9 * np.sqrt(n)):
        return 0.0
    return float(np.polyfit(np.log(sizes), np.log(fluct), 1)[0])


def auto_features(signal) -> np.ndarray:
    """The 22 catalogue statistics of one signal, in ``CATALOGUE_NAMES`` order."""
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise ValidationError("signal must be 1-D")
    if x.size < MIN_LENGTH:
        raise TooShortError(f"signal length {x.size} < {MIN_LENGTH}")
    n = x.size
    z = zscore(x)
    flat = not np.any(z)
    ac = autocorr(z)
    dz = np.diff(z)

    f1e = first_below(ac, 1.0 / math.e) if not flat else 0.0
    tau = int(min(max(1, math.ceil(f1e)), max(1, n // 10)))

    emb = np.stack([z[:-tau], z[tau:]])
    steps = np.sqrt(np.sum(np.diff(emb, axis=1) ** 2, axis=0))
    emb_cv = steps.std() / steps.mean() if steps.size and steps.mean() > 0 else 0.0

    max_lag = max(2, min(40, n // 2))
    rho = np.clip(ac[1:max_lag + 1], -1 + 1e-12, 1 - 1e-12)
    gami = -0.5 * np.log(1.0 - rho ** 2)
    gami_min = first_local_min(np.concatenate([[np.inf], gami])) if not flat else 0

    res3 = z[3:] - (z[:-3] + z[1:-2] + z[2:-1]) / 3.0
    res1 = dz
    if flat:
        tauresrat = 0.0
    else:
        f1e_res = first_below(autocorr(zscore(res1)), 1.0 / math.e)
        tauresrat = f1e_res / f1e if f1e > 0 else 0.0

    power = np.abs(np.fft.rfft(z)) ** 2
    power = power[1:]
    omega = np.linspace(0, np.pi, power.size + 1)[1:]
    total = power.sum()
    if total > 0:
        cum = np.cumsum(power) / total
        median_freq = omega[int(np.searchsorted(cum, 0.5))]
        low = power[: max(1, power.size // 5)].sum() / total
    else:
        median_freq = low = 0.0

    values = [
        hist_mode(z, 5),
        hist_mode(z, 10),
        ac[1],
        f1e,
        first_local_min(ac) if not flat else 0,
        outlier_timing(z),
        outlier_timing(-z),
        np.mean(dz ** 3),
        np.mean(np.abs(dz) > 0.04),
        longest_run(z > 0),
        longest_run(dz < 0),
        pair_entropy(symbolise(z, 3), 3) if not flat else 0.0,
        emb_cv,
        mutual_information(z[:-2], z[2:], 5),
        gami_min,
        res3.std(),
        tauresrat,
        periodicity_lag(ac),
        median_freq,
        low,
        transition_sumdiagcov(z, tau) if not flat else 0.0,
        dfa_alpha(z) if not flat else 0.0,
    ]
    out = np.asarray(values, dtype=np.float64)
    out[~np.isfinite(out)] = 0.0
    return out
