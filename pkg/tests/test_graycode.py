"""Gray encoding/decoding and correspondence maps against exhaustive oracles."""
import numpy as np
import pytest

from annorig.errors import DimensionMismatch, OutOfRange
from annorig.graycode import (COLUMN_AXIS, ROW_AXIS, bit_count_for,
                              build_sequence, decode_correspondences,
                              gray_decode, gray_encode)
from annorig.image import ImageFrame


class TestGrayCode:
    def test_zero_encodes_all_zeros(self):
        assert not gray_encode(0, 10).any()

    def test_roundtrip_exhaustive_1024(self):
        for i in range(1024):
            assert gray_decode(gray_encode(i, 10)) == i

    def test_bijection_up_to_4096(self):
        bits = 12
        codes = {tuple(gray_encode(i, bits)) for i in range(4096)}
        assert len(codes) == 4096
        for i in range(4096):
            assert gray_decode(gray_encode(i, bits)) == i

    def test_adjacent_codes_differ_in_one_bit(self):
        for bits in (4, 10):
            for i in range(2 ** bits - 1):
                dist = int(np.sum(gray_encode(i, bits) != gray_encode(i + 1, bits)))
                assert dist == 1

    def test_out_of_range(self):
        with pytest.raises(OutOfRange):
            gray_encode(1024, 10)
        with pytest.raises(OutOfRange):
            gray_encode(-1, 10)

    def test_bit_count(self):
        assert bit_count_for(1920) == 11
        assert bit_count_for(1024) == 10
        assert bit_count_for(1080) == 11


class TestBuildSequence:
    def test_pattern_count_and_inverses(self):
        seq = build_sequence(64, COLUMN_AXIS, width=64, height=8)
        assert seq.bit_count == 6
        assert len(seq.patterns) == 12
        for pattern, inverse in seq.pairs():
            np.testing.assert_array_equal(inverse.pixels, 255 - pattern.pixels)

    def test_columns_encode_coordinates(self):
        seq = build_sequence(64, COLUMN_AXIS, width=64, height=4)
        for x in range(64):
            bits = [int(pattern.pixels[0, x] > 127) for pattern, _ in seq.pairs()]
            assert gray_decode(np.array(bits)) == x


class TestDecodeCorrespondences:
    def synthetic_captures(self, width=64, height=16, contrast=200, ambient=20,
                           noise=0.0, seed=0):
        """Each camera column x sees projector column x (identity mapping)."""
        seq = build_sequence(width, COLUMN_AXIS, width=width, height=height)
        rng = np.random.default_rng(seed)
        captures = []
        for pattern, inverse in seq.pairs():
            pair = []
            for img in (pattern.pixels, inverse.pixels):
                intensity = ambient + contrast * (img.astype(float) / 255.0)
                if noise > 0:
                    intensity = intensity + rng.normal(0, noise, intensity.shape)
                pair.append(ImageFrame(np.clip(intensity, 0, 255).astype(np.uint8)))
            captures.append((pair[0], pair[1]))
        return captures

    def test_noiseless_identity_decode(self):
        captures = self.synthetic_captures()
        cmap = decode_correspondences(captures, COLUMN_AXIS, 64)
        assert cmap.valid.all()
        expected = np.tile(np.arange(64.0), (16, 1))
        np.testing.assert_array_equal(cmap.coords, expected)

    def test_equal_pattern_and_inverse_all_undecodable(self):
        img = ImageFrame(np.full((8, 8), 100, dtype=np.uint8))
        cmap = decode_correspondences([(img, img)] * 3, COLUMN_AXIS, 8)
        assert not cmap.valid.any()

    def test_noisy_decode_rate(self):
        correct_total, lit_total = 0, 0
        expected = np.tile(np.arange(64.0), (16, 1))
        for seed in range(5):
            captures = self.synthetic_captures(noise=2.0, contrast=200, seed=seed)
            cmap = decode_correspondences(captures, COLUMN_AXIS, 64)
            correct_total += int(np.sum(cmap.valid & (cmap.coords == expected)))
            lit_total += expected.size
        assert correct_total / lit_total >= 0.99

    def test_monotone_intensity_transform_invariance(self):
        captures = self.synthetic_captures()
        # gamma-ish monotone map applied identically to pattern and inverse
        def transform(frame):
            scaled = 255.0 * (frame.pixels.astype(float) / 255.0) ** 0.7
            return ImageFrame(scaled.astype(np.uint8))
        warped = [(transform(p), transform(i)) for p, i in captures]
        a = decode_correspondences(captures, COLUMN_AXIS, 64)
        b = decode_correspondences(warped, COLUMN_AXIS, 64)
        both = a.valid & b.valid
        np.testing.assert_array_equal(a.coords[both], b.coords[both])
        assert both.mean() > 0.95

    def test_dimension_mismatch(self):
        a = ImageFrame(np.zeros((8, 8), dtype=np.uint8))
        b = ImageFrame(np.zeros((8, 9), dtype=np.uint8))
        with pytest.raises(DimensionMismatch):
            decode_correspondences([(a, b)], COLUMN_AXIS, 8)

    def test_out_of_extent_marked_invalid(self):
        # decoded value 7 with extent 6 must be rejected
        captures = self.synthetic_captures(width=8)
        cmap = decode_correspondences(captures, COLUMN_AXIS, 6)
        assert not cmap.valid[:, 6:].any()
        assert cmap.valid[:, :6].all()
