"""Frame preparation: rounding, luminance, resizing, channel projections."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cascadekit.errors import ConfigMismatchError, InputError
from cascadekit.preprocess import (
    GRAYSCALE,
    IDENTITY_RGB,
    LUMA_WEIGHTS,
    PROJECTION_CHANNELS,
    ChannelProjection,
    Frame,
    clip_to_u8,
    from_tensor,
    project,
    resize_antialiased,
    round_half_up,
    to_tensor,
)


def rgb_frame(data):
    return Frame(np.asarray(data, dtype=np.uint8))


class TestRounding:
    def test_half_rounds_up(self):
        np.testing.assert_array_equal(
            round_half_up(np.array([0.5, 1.5, 2.5, 2.49, 2.51])),
            [1, 2, 3, 2, 3])

    def test_clip_to_u8_saturates(self):
        out = clip_to_u8(np.array([-3.0, 0.2, 254.5, 300.0]))
        assert out.dtype == np.uint8
        np.testing.assert_array_equal(out, [0, 0, 255, 255])


class TestGrayscale:
    def test_pure_red_maps_to_76(self):
        frame = rgb_frame([[[255, 0, 0]]])
        assert project(frame, GRAYSCALE).data[0, 0, 0] == 76

    def test_primary_channel_values(self):
        # 0.587*255 = 149.685 -> 150; 0.114*255 = 29.07 -> 29
        assert project(rgb_frame([[[0, 255, 0]]]), GRAYSCALE).data[0, 0, 0] == 150
        assert project(rgb_frame([[[0, 0, 255]]]), GRAYSCALE).data[0, 0, 0] == 29

    def test_weights_sum_to_one(self):
        assert abs(sum(LUMA_WEIGHTS) - 1.0) < 1e-12

    @given(st.integers(0, 255))
    def test_achromatic_pixels_are_fixed_points(self, v):
        frame = rgb_frame([[[v, v, v]]])
        assert project(frame, GRAYSCALE).data[0, 0, 0] == v

    def test_output_is_single_channel(self):
        frame = rgb_frame(np.zeros((4, 5, 3)))
        gray = project(frame, GRAYSCALE)
        assert gray.data.shape == (4, 5, 1)


class TestResize:
    def test_identity_is_bitwise_copy(self):
        rng = np.random.default_rng(0)
        frame = rgb_frame(rng.integers(0, 256, (6, 6, 3)))
        out = resize_antialiased(frame, 6)
        np.testing.assert_array_equal(out.data, frame.data)
        assert out.data is not frame.data

    def test_2x2_mean_rounds_half_up(self):
        frame = Frame(np.array([[0, 0], [255, 255]], dtype=np.uint8))
        out = resize_antialiased(frame, 1)
        assert out.data[0, 0, 0] == 128  # mean 127.5

    def test_downscale_is_area_average(self):
        """4x4 -> 2x2 averages disjoint 2x2 boxes exactly."""
        rng = np.random.default_rng(1)
        data = rng.integers(0, 256, (4, 4, 3)).astype(np.uint8)
        out = resize_antialiased(Frame(data), 2)
        for y in range(2):
            for x in range(2):
                box = data[2 * y:2 * y + 2, 2 * x:2 * x + 2].astype(float)
                expect = clip_to_u8(box.mean(axis=(0, 1)))
                np.testing.assert_array_equal(out.data[y, x], expect)

    def test_fractional_overlap_weights(self):
        """3 -> 2: the first output cell covers pixel 0 fully and pixel 1
        half, so its value is (2*a + b) / 3."""
        data = np.array([[30, 90, 60]], dtype=np.uint8).T[:, :, None]
        frame = Frame(np.broadcast_to(data, (3, 3, 1)).copy())
        out = resize_antialiased(frame, 2)
        assert out.data[0, 0, 0] == round((2 * 30 + 90) / 3)
        assert out.data[1, 0, 0] == round((90 + 2 * 60) / 3)

    def test_upscale_is_nearest_neighbor_floor(self):
        frame = Frame(np.array([[10, 200]], dtype=np.uint8))
        out = resize_antialiased(Frame(np.broadcast_to(
            frame.data.reshape(1, 2, 1), (2, 2, 1)).copy()), 4)
        # column map: floor(i * 2 / 4) -> [0, 0, 1, 1]
        np.testing.assert_array_equal(out.data[0, :, 0], [10, 10, 200, 200])

    def test_constant_image_is_preserved_at_any_size(self):
        frame = rgb_frame(np.full((7, 7, 3), 99))
        for side in (1, 3, 5, 7, 11):
            assert np.all(resize_antialiased(frame, side).data == 99)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 1000), st.sampled_from([3, 5, 8]))
    def test_gray_of_resize_close_to_resize_of_gray(self, seed, side):
        """Both operators are affine up to rounding, so the two orders agree
        within 1 gray level."""
        rng = np.random.default_rng(seed)
        frame = rgb_frame(rng.integers(0, 256, (13, 13, 3)))
        a = project(resize_antialiased(frame, side), GRAYSCALE).data.astype(int)
        b = resize_antialiased(project(frame, GRAYSCALE), side).data.astype(int)
        assert np.abs(a - b).max() <= 1

    def test_rejects_nonpositive_target(self):
        with pytest.raises(InputError):
            resize_antialiased(rgb_frame(np.zeros((2, 2, 3))), 0)


class TestProjections:
    def test_channel_counts(self):
        assert PROJECTION_CHANNELS == {
            "identity_rgb": 3, "grayscale": 1,
            "pair_rg": 2, "pair_gb": 2, "pair_br": 2,
            "single_r": 1, "single_g": 1, "single_b": 1,
        }
        for kind, n in PROJECTION_CHANNELS.items():
            assert ChannelProjection(kind).output_channels == n

    def test_pairs_and_singles_pick_expected_channels(self):
        frame = rgb_frame([[[10, 20, 30]]])
        picks = {
            "pair_rg": [10, 20], "pair_gb": [20, 30], "pair_br": [30, 10],
            "single_r": [10], "single_g": [20], "single_b": [30],
        }
        for kind, expect in picks.items():
            out = project(frame, ChannelProjection(kind))
            assert out.data[0, 0].tolist() == expect

    def test_identity_copies(self):
        frame = rgb_frame([[[1, 2, 3]]])
        out = project(frame, IDENTITY_RGB)
        np.testing.assert_array_equal(out.data, frame.data)
        assert out.data is not frame.data

    def test_all_kinds_require_rgb_input(self):
        gray = Frame(np.zeros((2, 2, 1), dtype=np.uint8))
        for kind in PROJECTION_CHANNELS:
            with pytest.raises(ConfigMismatchError):
                project(gray, ChannelProjection(kind))

    def test_unknown_kind_rejected(self):
        with pytest.raises(InputError):
            ChannelProjection("chroma")


class TestTensors:
    def test_51_maps_to_exactly_0p2(self):
        frame = Frame(np.full((1, 1, 1), 51, dtype=np.uint8))
        assert to_tensor(frame)[0, 0, 0] == 0.2

    def test_range_and_dtype(self):
        frame = rgb_frame([[[0, 128, 255]]])
        t = to_tensor(frame)
        assert t.dtype == np.float64
        np.testing.assert_allclose(t[0, 0], [0.0, 128 / 255, 1.0])

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_round_trip_is_exact(self, seed):
        rng = np.random.default_rng(seed)
        frame = rgb_frame(rng.integers(0, 256, (3, 4, 3)))
        again = from_tensor(to_tensor(frame), frame.timestamp_index)
        np.testing.assert_array_equal(again.data, frame.data)


class TestFrame:
    def test_2d_input_gains_channel_axis(self):
        frame = Frame(np.zeros((2, 3), dtype=np.uint8))
        assert frame.data.shape == (2, 3, 1)
        assert (frame.height, frame.width, frame.channels) == (2, 3, 1)

    def test_validation(self):
        with pytest.raises(InputError):
            Frame(np.zeros((2, 2, 3), dtype=np.float32))
        with pytest.raises(InputError):
            Frame(np.zeros((2, 2, 4), dtype=np.uint8))
        with pytest.raises(InputError):
            Frame(np.zeros((0, 2, 1), dtype=np.uint8))
        with pytest.raises(InputError):
            Frame(np.zeros((2, 2, 1), dtype=np.uint8), timestamp_index=-1)
