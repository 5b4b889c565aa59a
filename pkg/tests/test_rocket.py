import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exercise_tsc.errors import ShapeMismatchError, TooShortError
from exercise_tsc.rocket import (Kernel, KernelSet, apply_kernel, generate_kernels, kernel_rng,
                                 transform)
from exercise_tsc.series import MultivariateSeries

from oracles import naive_ppv_max, naive_transform


def make_kernel(weights, bias=0.0, dilation=1, padding=0, channels=(0,)):
    w = np.atleast_2d(np.asarray(weights, dtype=np.float64))
    return Kernel(w.shape[1], w, bias, dilation, padding, np.asarray(channels))


@pytest.fixture(scope="module")
def small():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((5, 4, 40))
    return X, generate_kernels(30, 4, 40, seed=11)


class TestGenerate:
    def test_deterministic(self):
        assert generate_kernels(100, 6, 161, 42) == generate_kernels(100, 6, 161, 42)
        assert generate_kernels(100, 6, 161, 42) != generate_kernels(100, 6, 161, 43)

    def test_prefix_stable(self):
        # per-kernel substreams: a longer set starts with the shorter one
        a, b = generate_kernels(10, 5, 100, 1), generate_kernels(25, 5, 100, 1)
        for k in range(10):
            ka, kb = a.kernel(k), b.kernel(k)
            np.testing.assert_array_equal(ka.weights, kb.weights)
            assert (ka.bias, ka.dilation, ka.padding) == (kb.bias, kb.dilation, kb.padding)

    def test_single_channel(self):
        ks = generate_kernels(50, 1, 161, 0)
        assert all(list(k.channel_indices) == [0] for k in ks.kernels)

    def test_dilation_bound(self):
        ks = generate_kernels(2000, 3, 161, 5)
        for k in ks.kernels:
            if k.length == 11:
                assert k.dilation <= 16
            assert k.span <= 161 + 2 * k.padding

    def test_too_short(self):
        with pytest.raises(TooShortError):
            generate_kernels(5, 2, 10, 0)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 20), st.integers(1, 45), st.integers(11, 300), st.integers(0, 2**63 - 1))
    def test_kernel_invariants(self, n, c, length, seed):
        ks = generate_kernels(n, c, length, seed)
        assert ks.num_features == 2 * n
        for k in ks.kernels:
            assert k.length in (7, 9, 11)
            assert np.all(np.abs(k.weights.mean(axis=1)) < 1e-9)
            assert -1 <= k.bias <= 1
            assert k.dilation >= 1
            assert k.padding in (0, ((k.length - 1) * k.dilation) // 2)
            ch = k.channel_indices
            assert ch.size >= 1 and np.all(np.diff(ch) > 0) and ch.max() < c
            assert ch.size & (ch.size - 1) == 0 or ch.size == c

    def test_first_draw_is_length(self):
        # documents the per-kernel draw order
        rng = kernel_rng(9, 0)
        first = (7, 9, 11)[rng.integers(3)]
        assert generate_kernels(1, 3, 161, 9).kernel(0).length == first

    def test_save_load_bit_exact(self, tmp_path, small):
        _, ks = small
        ks.save(tmp_path / "k.npz")
        back = KernelSet.load(tmp_path / "k.npz")
        assert back == ks
        back.save(tmp_path / "k2.npz")
        assert (tmp_path / "k.npz").read_bytes() == (tmp_path / "k2.npz").read_bytes()


class TestApplyKernel:
    def test_shifted_copy(self):
        # a unit tap at the first position with padding 3 shifts the input right by 3;
        # the valid output length is 4 + 2*3 - 6 = 4, of which only the last sees x[0] = 1
        k = make_kernel([1, 0, 0, 0, 0, 0, 0], padding=3)
        x = np.array([[1.0, -1.0, 1.0, -1.0]])
        ppv, mx = apply_kernel(x, k)
        assert (ppv, mx) == naive_ppv_max(x, k)
        assert ppv == pytest.approx(1 / 4)
        assert mx == 1.0

    @pytest.mark.parametrize("bias,ppv", [(-0.5, 0.0), (0.5, 1.0)])
    def test_zero_signal(self, bias, ppv):
        k = make_kernel(np.random.default_rng(0).standard_normal(9), bias=bias, dilation=2)
        s = MultivariateSeries(("a",), np.zeros((1, 40)))
        assert apply_kernel(s, k) == (ppv, bias)

    def test_span_exceeds_input(self):
        with pytest.raises(ShapeMismatchError):
            apply_kernel(np.zeros((1, 10)), make_kernel(np.ones(7), dilation=2))

    def test_matches_oracle(self, small):
        X, ks = small
        for k in ks.kernels[:10]:
            ppv, mx = apply_kernel(X[0], k)
            o_ppv, o_mx = naive_ppv_max(X[0], k)
            assert ppv == o_ppv
            assert mx == pytest.approx(o_mx, abs=1e-12)


@pytest.mark.parametrize("backend", ["numba", "numpy"])
class TestTransform:
    def test_matches_oracle(self, small, backend):
        X, ks = small
        np.testing.assert_allclose(transform(X, ks, backend=backend), naive_transform(X, ks),
                                   rtol=0, atol=1e-9)

    def test_shape_and_ranges(self, small, backend):
        X, ks = small
        F = transform(X[:3], ks, backend=backend)
        assert F.shape == (3, 60)
        assert np.all((F[:, ::2] >= 0) & (F[:, ::2] <= 1))

    def test_duplicates_and_order(self, small, backend):
        X, ks = small
        F = transform(X, ks, backend=backend)
        perm = [3, 1, 4, 0, 2]
        np.testing.assert_array_equal(transform(X[perm], ks, backend=backend), F[perm])
        G = transform(np.stack([X[0], X[0]]), ks, backend=backend)
        np.testing.assert_array_equal(G[0], G[1])

    def test_shape_mismatch(self, small, backend):
        X, ks = small
        with pytest.raises(ShapeMismatchError):
            transform(X[:, :3], ks, backend=backend)
        with pytest.raises(ShapeMismatchError):
            transform(X[:, :, :30], ks, backend=backend)


def test_backends_agree(small):
    X, ks = small
    np.testing.assert_allclose(transform(X, ks, backend="numba"),
                               transform(X, ks, backend="numpy"), rtol=0, atol=1e-12)


def test_env_flag_selects_backend(small, monkeypatch):
    X, ks = small
    monkeypatch.setenv("EXERCISE_TSC_BACKEND", "numpy")
    a = transform(X, ks)
    monkeypatch.setenv("EXERCISE_TSC_BACKEND", "bogus")
    with pytest.raises(ValueError):
        transform(X, ks)
    monkeypatch.delenv("EXERCISE_TSC_BACKEND")
    np.testing.assert_allclose(transform(X, ks), a, atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.permutations(range(4)), st.integers(0, 1000))
def test_channel_permutation(perm, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((3, 4, 30))
    ks = generate_kernels(15, 4, 30, seed)
    perm = np.asarray(perm)
    inv = np.argsort(perm)
    # channel c of the original is channel inv[c] of the permuted input
    pk = []
    for k in ks.kernels:
        new = inv[k.channel_indices]
        order = np.argsort(new)
        pk.append((k.length, k.weights[order], k.bias, k.dilation, k.padding, new[order]))
    moved = KernelSet([p[0] for p in pk], np.concatenate([p[1].ravel() for p in pk]),
                      [p[2] for p in pk], [p[3] for p in pk], [p[4] for p in pk],
                      [len(p[5]) for p in pk], np.concatenate([p[5] for p in pk]),
                      input_length=30, num_channels=4, seed=seed)
    np.testing.assert_allclose(transform(X[:, perm], moved), transform(X, ks), atol=1e-12)
