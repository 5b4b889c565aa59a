"""Random convolutional kernel transform for multivariate series.

Each kernel is a dilated, optionally padded multichannel cross-correlation
with a bias. A sample is summarised by two numbers per kernel: the
proportion of positive outputs (PPV) and the maximum output. Features are
laid out ``[ppv_0, max_0, ppv_1, max_1, ...]`` in kernel generation order.

Kernel generation is seeded per kernel: kernel ``k`` draws from
``PCG64(SeedSequence(seed, spawn_key=(k,)))``, in this order: length,
channel-count exponent, channel subset, weights, bias, dilation exponent,
padding flag. Any kernel can therefore be regenerated on its own and the
whole set is independent of how generation is scheduled.

The transform runs a numba kernel parallelised over samples; with
``EXERCISE_TSC_BACKEND=numpy`` a vectorised numpy version is used instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _accel
from ._accel import njit, prange
from ._store import load_archive, save_archive
from .errors import ShapeMismatchError, TooShortError, ValidationError

KERNEL_LENGTHS = (7, 9, 11)
DEFAULT_NUM_KERNELS = 10_000
FORMAT_VERSION = 1


@dataclass(frozen=True)
class Kernel:
    length: int
    weights: np.ndarray  # (len(channel_indices), length)
    bias: float
    dilation: int
    padding: int
    channel_indices: np.ndarray

    @property
    def span(self) -> int:
        return (self.length - 1) * self.dilation + 1


class KernelSet:
    """Flat-array storage for a batch of kernels (the layout the kernels consume)."""

    def __init__(self, lengths, weights, biases, dilations, paddings,
                 num_channel_indices, channel_indices, *, input_length, num_channels, seed):
        self.lengths = np.ascontiguousarray(lengths, dtype=np.int64)
        self.weights = np.ascontiguousarray(weights, dtype=np.float64)
        self.biases = np.ascontiguousarray(biases, dtype=np.float64)
        self.dilations = np.ascontiguousarray(dilations, dtype=np.int64)
        self.paddings = np.ascontiguousarray(paddings, dtype=np.int64)
        self.num_channel_indices = np.ascontiguousarray(num_channel_indices, dtype=np.int64)
        self.channel_indices = np.ascontiguousarray(channel_indices, dtype=np.int64)
        self.input_length = int(input_length)
        self.num_channels = int(num_channels)
        self.seed = int(seed)
        k = len(self.lengths)
        for name in ("biases", "dilations", "paddings", "num_channel_indices"):
            if len(getattr(self, name)) != k:
                raise ValidationError(f"KernelSet.{name} has wrong length")
        if self.weights.size != int(np.sum(self.lengths * self.num_channel_indices)):
            raise ValidationError("KernelSet.weights size does not match kernel shapes")
        if self.channel_indices.size != int(self.num_channel_indices.sum()):
            raise ValidationError("KernelSet.channel_indices size does not match")
        self._w_off = np.concatenate([[0], np.cumsum(self.lengths * self.num_channel_indices)])
        self._c_off = np.concatenate([[0], np.cumsum(self.num_channel_indices)])

    @property
    def num_kernels(self) -> int:
        return len(self.lengths)

    @property
    def num_features(self) -> int:
        return 2 * self.num_kernels

    def __len__(self):
        return self.num_kernels

    def kernel(self, k: int) -> Kernel:
        length = int(self.lengths[k])
        nc = int(self.num_channel_indices[k])
        w = self.weights[self._w_off[k]:self._w_off[k + 1]].reshape(nc, length)
        return Kernel(
            length=length,
            weights=w.copy(),
            bias=float(self.biases[k]),
            dilation=int(self.dilations[k]),
            padding=int(self.paddings[k]),
            channel_indices=self.channel_indices[self._c_off[k]:self._c_off[k + 1]].copy(),
        )

    @property
    def kernels(self) -> list:
        return [self.kernel(k) for k in range(self.num_kernels)]

    def feature_names(self) -> list:
        names = []
        for k in range(self.num_kernels):
            names += [f"k{k}_ppv", f"k{k}_max"]
        return names

    def _arrays(self) -> dict:
        return {
            "lengths": self.lengths,
            "weights": self.weights,
            "biases": self.biases,
            "dilations": self.dilations,
            "paddings": self.paddings,
            "num_channel_indices": self.num_channel_indices,
            "channel_indices": self.channel_indices,
        }

    def __eq__(self, other):
        if not isinstance(other, KernelSet):
            return NotImplemented
        same_meta = (self.input_length, self.num_channels, self.seed) == (
            other.input_length, other.num_channels, other.seed)
        return same_meta and all(
            np.array_equal(a, b) for a, b in zip(self._arrays().values(), other._arrays().values())
        )

    def save(self, path) -> None:
        meta = {
            "format": "exercise_tsc.kernelset",
            "version": FORMAT_VERSION,
            "input_length": self.input_length,
            "num_channels": self.num_channels,
            "seed": self.seed,
            "num_kernels": self.num_kernels,
        }
        save_archive(path, self._arrays(), meta)

    @classmethod
    def load(cls, path) -> "KernelSet":
        arrays, meta = load_archive(path)
        if meta.get("format") != "exercise_tsc.kernelset":
            raise ValidationError(f"{path}: not a kernel set archive")
        if meta.get("version") != FORMAT_VERSION:
            raise ValidationError(f"{path}: unsupported kernel set version {meta.get('version')}")
        return cls(**arrays, input_length=meta["input_length"],
                   num_channels=meta["num_channels"], seed=meta["seed"])


def kernel_rng(seed: int, k: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(k,))))


def _draw_kernel(rng: np.random.Generator, num_channels: int, input_length: int):
    length = int(KERNEL_LENGTHS[rng.integers(len(KERNEL_LENGTHS))])
    max_exp = int(math.floor(math.log2(num_channels)))
    nc = min(2 ** int(rng.integers(0, max_exp + 1)), num_channels)
    chans = np.sort(rng.choice(num_channels, nc, replace=False))
    w = rng.standard_normal((nc, length))
    w -= w.mean(axis=1, keepdims=True)
    bias = rng.uniform(-1.0, 1.0)
    x = rng.uniform(0.0, math.log2((input_length - 1) / (length - 1)))
    dilation = int(2 ** x)
    padding = ((length - 1) * dilation) // 2 if rng.integers(2) == 1 else 0
    return length, w, bias, dilation, padding, chans


def generate_kernels(num_kernels: int, num_channels: int, input_length: int,
                     seed: int) -> KernelSet:
    """Draw ``num_kernels`` random kernels for ``(num_channels, input_length)`` inputs."""
    if num_kernels < 1:
        raise ValidationError("num_kernels must be >= 1")
    if num_channels < 1:
        raise ValidationError("num_channels must be >= 1")
    if input_length < max(KERNEL_LENGTHS):
        raise TooShortError(f"input_length {input_length} < {max(KERNEL_LENGTHS)}")
    lengths, weights, biases, dilations, paddings, ncs, chans = [], [], [], [], [], [], []
    for k in range(num_kernels):
        length, w, b, d, p, ch = _draw_kernel(kernel_rng(seed, k), num_channels, input_length)
        lengths.append(length)
        weights.append(w.ravel())
        biases.append(b)
        dilations.append(d)
        paddings.append(p)
        ncs.append(len(ch))
        chans.append(ch)
    return KernelSet(lengths, np.concatenate(weights), biases, dilations, paddings, ncs,
                     np.concatenate(chans), input_length=input_length,
                     num_channels=num_channels, seed=seed)


# --------------------------------------------------------------------------
# compiled path


@njit(fastmath=False)
def _apply_kernel_nb(x, buf, weights, w_start, length, bias, dilation, padding,
                     chans, c_start, nc):
    n = x.shape[1]
    out_len = n + 2 * padding - (length - 1) * dilation
    for i in range(out_len):
        buf[i] = bias
    for c in range(nc):
        row = x[chans[c_start + c]]
        for j in range(length):
            w = weights[w_start + c * length + j]
            # output i reads input index i + off; clip to the unpadded range
            off = j * dilation - padding
            lo = max(0, -off)
            hi = min(out_len, n - off)
            # zero-based slices keep the loop free of wraparound checks so it vectorises
            dst = buf[lo:hi]
            src = row[lo + off:hi + off]
            for t in range(hi - lo):
                dst[t] += w * src[t]
    positive = 0
    best = -np.inf
    for i in range(out_len):
        v = buf[i]
        if v > best:
            best = v
        if v > 0.0:
            positive += 1
    return positive / out_len, best


@njit(parallel=True, fastmath=False)
def _transform_nb(X, lengths, weights, biases, dilations, paddings, ncs, chans,
                  w_off, c_off):
    n_samples = X.shape[0]
    n_kernels = lengths.shape[0]
    out = np.empty((n_samples, 2 * n_kernels))
    max_out = X.shape[2] + (lengths.max() - 1) * dilations.max()
    for s in prange(n_samples):
        x = X[s]
        buf = np.empty(max_out)
        for k in range(n_kernels):
            ppv, mx = _apply_kernel_nb(x, buf, weights, w_off[k], lengths[k], biases[k],
                                       dilations[k], paddings[k], chans, c_off[k], ncs[k])
            out[s, 2 * k] = ppv
            out[s, 2 * k + 1] = mx
    return out


# --------------------------------------------------------------------------
# numpy path


def _convolve_np(X: np.ndarray, kernel: Kernel) -> np.ndarray:
    """Kernel outputs for every sample, shape ``(N, out_len)``."""
    xs = X[:, kernel.channel_indices, :]
    p = kernel.padding
    if p:
        xs = np.pad(xs, ((0, 0), (0, 0), (p, p)))
    out_len = xs.shape[2] - (kernel.length - 1) * kernel.dilation
    acc = np.full((X.shape[0], out_len), kernel.bias)
    for j in range(kernel.length):
        start = j * kernel.dilation
        acc += np.einsum("c,nct->nt", kernel.weights[:, j], xs[:, :, start:start + out_len])
    return acc


def _transform_np(X: np.ndarray, kernels: KernelSet) -> np.ndarray:
    out = np.empty((X.shape[0], kernels.num_features))
    for k in range(kernels.num_kernels):
        conv = _convolve_np(X, kernels.kernel(k))
        out[:, 2 * k] = (conv > 0).mean(axis=1)
        out[:, 2 * k + 1] = conv.max(axis=1)
    return out


# --------------------------------------------------------------------------
# public API


def _as_2d(sample) -> np.ndarray:
    values = getattr(sample, "values", sample)
    x = np.asarray(values, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ShapeMismatchError(f"sample must be (channels, length), got {x.shape}")
    return x


def apply_kernel(sample, kernel: Kernel) -> tuple:
    """``(ppv, max)`` of one kernel over one sample (series or 2-D array)."""
    x = _as_2d(sample)
    if kernel.span > x.shape[1] + 2 * kernel.padding:
        raise ShapeMismatchError(
            f"kernel span {kernel.span} exceeds padded input length {x.shape[1] + 2 * kernel.padding}")
    if kernel.channel_indices.size == 0 or kernel.channel_indices.max() >= x.shape[0]:
        raise ShapeMismatchError("kernel reads channels outside the sample")
    conv = _convolve_np(x[None], kernel)[0]
    return float((conv > 0).mean()), float(conv.max())


def transform(data, kernels: KernelSet, backend: str | None = None) -> np.ndarray:
    """Feature matrix ``(N, 2 * num_kernels)`` for a dataset or ``(N, C, L)`` array."""
    X = data.to_array() if hasattr(data, "to_array") else np.asarray(data, dtype=np.float64)
    if X.ndim != 3:
        raise ShapeMismatchError(f"expected (N, channels, length), got {X.shape}")
    if X.shape[1] != kernels.num_channels or X.shape[2] != kernels.input_length:
        raise ShapeMismatchError(
            f"data shape (C={X.shape[1]}, L={X.shape[2]}) does not match kernels "
            f"(C={kernels.num_channels}, L={kernels.input_length})")
    X = np.ascontiguousarray(X, dtype=np.float64)
    backend = backend or _accel.backend()
    if backend == "numba":
        return _transform_nb(X, kernels.lengths, kernels.weights, kernels.biases,
                             kernels.dilations, kernels.paddings, kernels.num_channel_indices,
                             kernels.channel_indices, kernels._w_off, kernels._c_off)
    if backend == "numpy":
        return _transform_np(X, kernels)
    raise ValueError(f"unknown backend {backend!r}")
