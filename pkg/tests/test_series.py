import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from exercise_tsc.errors import DegenerateSeriesError, ValidationError
from exercise_tsc.series import (Dataset, LabeledSample, MultivariateSeries, repair_gaps,
                                 resample_linear, znormalize)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@st.composite
def series(draw, min_len=2, max_len=60):
    c = draw(st.integers(1, 4))
    n = draw(st.integers(min_len, max_len))
    v = draw(arrays(np.float64, (c, n), elements=finite))
    return MultivariateSeries(tuple(f"c{i}" for i in range(c)), v, 50.0)


def one(values):
    return MultivariateSeries(("a",), np.atleast_2d(values))


def brute_interp(v, x):
    # direct evaluation of the piecewise-linear function through (i, v[i])
    i = int(x)
    if i >= len(v) - 1:
        return v[-1]
    return v[i] + (x - i) * (v[i + 1] - v[i])


class TestValidation:
    def test_rejects_nan(self):
        with pytest.raises(ValidationError):
            one([1.0, np.nan, 2.0])

    def test_rejects_short(self):
        with pytest.raises(DegenerateSeriesError):
            one([1.0])

    def test_name_count(self):
        with pytest.raises(ValidationError):
            MultivariateSeries(("a", "b"), np.zeros((1, 5)))

    def test_values_are_copied_and_frozen(self):
        raw = np.arange(6.0).reshape(2, 3)
        s = MultivariateSeries(("a", "b"), raw)
        raw[0, 0] = 99
        assert s.values[0, 0] == 0
        with pytest.raises(ValueError):
            s.values[0, 0] = 1

    def test_label_must_match_exercise(self):
        s = one([0.0, 1.0])
        with pytest.raises(ValidationError):
            Dataset([LabeledSample(s, "Ext", "P1", "imu", 0)], "military_press")
        Dataset([LabeledSample(s, "Ext", "P1", "imu", 0)], "rowing")

    def test_empty_participant(self):
        with pytest.raises(ValidationError):
            LabeledSample(one([0.0, 1.0]), "N", "", "imu", 0)


class TestResample:
    def test_ramp(self):
        out = resample_linear(one([1.0, 2.0, 3.0]), 5)
        np.testing.assert_allclose(out.values[0], [1, 1.5, 2, 2.5, 3], atol=1e-15)

    def test_against_brute_force(self):
        v = [0.0, 1.0, 0.0]
        out = resample_linear(one(v), 4).values[0]
        expected = [brute_interp(v, x) for x in (0, 2 / 3, 4 / 3, 2)]
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_too_short_target(self):
        with pytest.raises(DegenerateSeriesError):
            resample_linear(one([1.0, 2.0]), 1)

    def test_rate_tracks_duration(self):
        s = MultivariateSeries(("a",), np.zeros((1, 11)), 10.0)
        assert resample_linear(s, 21).sample_rate_hz == pytest.approx(20.0)

    @given(series(), st.integers(2, 200))
    def test_shape_order_and_endpoints(self, s, target):
        out = resample_linear(s, target)
        assert out.channel_names == s.channel_names
        assert out.values.shape == (s.num_channels, target)
        np.testing.assert_array_equal(out.values[:, 0], s.values[:, 0])
        np.testing.assert_array_equal(out.values[:, -1], s.values[:, -1])

    @given(series())
    def test_identity(self, s):
        np.testing.assert_allclose(resample_linear(s, s.length).values, s.values, atol=1e-12)

    @given(st.integers(2, 80), st.integers(2, 300), finite, st.floats(-100, 100))
    def test_ramp_round_trip(self, n, target, a, slope):
        ramp = one(a + slope * np.arange(n))
        back = resample_linear(resample_linear(ramp, target), n)
        np.testing.assert_allclose(back.values, ramp.values, rtol=1e-9, atol=1e-6)

    @given(series(), st.integers(2, 100))
    def test_pure(self, s, target):
        before = s.values.copy()
        resample_linear(s, target)
        np.testing.assert_array_equal(s.values, before)


class TestZNormalize:
    def test_example(self):
        out = znormalize(one([1.0, 2.0, 3.0])).values[0]
        r = 1 / np.sqrt(2 / 3)
        np.testing.assert_allclose(out, [-r, 0, r], atol=1e-12)

    def test_constant_channel(self):
        np.testing.assert_array_equal(znormalize(one([5.0] * 4)).values[0], [0, 0, 0, 0])

    @given(series(min_len=3))
    def test_moments_and_idempotence(self, s):
        out = znormalize(s)
        for raw, row in zip(s.values, out.values):
            if raw.std() < 1e-6 * max(1.0, np.abs(raw).max()):
                continue
            assert abs(row.mean()) < 1e-9
            assert abs(row.std() - 1) < 1e-9
        np.testing.assert_allclose(znormalize(out).values, out.values, atol=1e-9)


class TestRepairGaps:
    def test_interior_gap(self):
        out = repair_gaps(np.array([1.0, 0.0, 3.0]), np.array([True, False, True]))
        np.testing.assert_allclose(out, [1, 2, 3])

    def test_edges_take_nearest(self):
        out = repair_gaps(np.array([0.0, 2.0, 4.0, 0.0]), np.array([False, True, True, False]))
        np.testing.assert_allclose(out, [2, 2, 4, 4])

    def test_all_missing_row(self):
        out = repair_gaps(np.array([[7.0, 7.0]]), np.array([[False, False]]))
        np.testing.assert_array_equal(out, [[0, 0]])

    @settings(max_examples=50)
    @given(arrays(np.float64, 30, elements=finite), arrays(bool, 30))
    def test_valid_entries_untouched(self, v, ok):
        out = repair_gaps(v, ok)
        np.testing.assert_array_equal(out[ok], v[ok])
        assert np.all(np.isfinite(out))
