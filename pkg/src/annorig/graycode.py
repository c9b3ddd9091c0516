"""Gray-code pattern sequences and per-pixel correspondence decoding.

The projector encodes its column (or row) index into a sequence of binary
stripe patterns; each pattern ships with its inverse so a camera pixel's bit
is read from the sign of (pattern - inverse) regardless of albedo. A pixel is
undecodable as soon as one bit's contrast falls inside the threshold band.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, OutOfRange
from .image import ImageFrame

DEFAULT_THRESHOLD = 5.0

COLUMN_AXIS = "column"
ROW_AXIS = "row"


def bit_count_for(extent: int) -> int:
    if extent < 2:
        return 1
    return int(np.ceil(np.log2(extent)))


def gray_encode(index: int, bit_count: int) -> np.ndarray:
    """Gray-code bits of an index, MSB first, as a uint8 {0,1} array."""
    if not 0 <= index < (1 << bit_count):
        raise OutOfRange(f"index {index} outside [0, 2^{bit_count})")
    gray = index ^ (index >> 1)
    return np.array([(gray >> (bit_count - 1 - b)) & 1 for b in range(bit_count)],
                    dtype=np.uint8)


def gray_decode(bits: np.ndarray) -> int:
    """Inverse of gray_encode; bits MSB first."""
    value = 0
    acc = 0
    for bit in np.asarray(bits).astype(int):
        acc ^= bit
        value = (value << 1) | acc
    return value


@dataclass(frozen=True)
class GrayCodeSequence:
    """Stripe patterns for one axis at projector resolution.

    patterns holds 2*bit_count frames: each code pattern immediately followed
    by its inverse, MSB first.
    """

    axis: str
    bit_count: int
    extent: int
    patterns: tuple

    def __post_init__(self):
        if len(self.patterns) != 2 * self.bit_count:
            raise ValueError("patterns must hold a (pattern, inverse) pair per bit")

    def pairs(self) -> list[tuple[ImageFrame, ImageFrame]]:
        return [(self.patterns[2 * i], self.patterns[2 * i + 1])
                for i in range(self.bit_count)]


def build_sequence(extent: int, axis: str, width: int, height: int) -> GrayCodeSequence:
    """Patterns encoding coordinate 0..extent-1 along the given axis."""
    bits = bit_count_for(extent)
    coords = np.arange(extent)
    gray = coords ^ (coords >> 1)
    frames = []
    for b in range(bits):
        stripe = (((gray >> (bits - 1 - b)) & 1) * 255).astype(np.uint8)
        if axis == COLUMN_AXIS:
            img = np.tile(stripe[np.newaxis, :width], (height, 1))
        elif axis == ROW_AXIS:
            img = np.tile(stripe[:height, np.newaxis], (1, width))
        else:
            raise ValueError(f"axis must be '{COLUMN_AXIS}' or '{ROW_AXIS}'")
        frames.append(ImageFrame(img, frame_index=2 * b))
        frames.append(ImageFrame(255 - img, frame_index=2 * b + 1))
    return GrayCodeSequence(axis=axis, bit_count=bits, extent=extent,
                            patterns=tuple(frames))


@dataclass(frozen=True)
class CorrespondenceMap:
    """Per-camera-pixel decoded projector coordinate along one axis.

    coords is float64 so synthetic (sub-pixel) maps can be injected in tests;
    decoding itself produces integers. Pixels failing the contrast test or
    decoding outside the projector extent are invalid. confidence is the
    smallest |pattern - inverse| contrast across bits.
    """

    axis: str
    coords: np.ndarray
    valid: np.ndarray
    confidence: np.ndarray

    @property
    def valid_fraction(self) -> float:
        return float(self.valid.mean()) if self.valid.size else 0.0


def decode_correspondences(captures: list[tuple[ImageFrame, ImageFrame]],
                           axis: str, extent: int,
                           threshold: float = DEFAULT_THRESHOLD) -> CorrespondenceMap:
    """Decode camera captures of a Gray sequence into projector coordinates.

    captures: one (pattern, inverse) camera frame pair per bit, MSB first.
    A bit reads 1 when pattern > inverse + threshold, 0 when pattern <
    inverse - threshold, and marks the pixel undecodable otherwise.
    """
    if not captures:
        raise ValueError("no captures to decode")
    shape = captures[0][0].pixels.shape
    for pat, inv in captures:
        if pat.pixels.shape != shape or inv.pixels.shape != shape:
            raise DimensionMismatch("capture frames differ in dimensions")

    bit_count = len(captures)
    gray = np.zeros(shape, dtype=np.int64)
    valid = np.ones(shape, dtype=bool)
    confidence = np.full(shape, np.inf)
    for pat, inv in captures:
        diff = pat.as_float() - inv.as_float()
        confidence = np.minimum(confidence, np.abs(diff))
        valid &= np.abs(diff) > threshold
        gray = (gray << 1) | (diff > threshold)

    # vectorized gray -> binary: successive xor-shift folds
    binary = gray.copy()
    shift = 1
    while shift < bit_count:
        binary ^= binary >> shift
        shift <<= 1

    valid &= binary < extent
    coords = binary.astype(np.float64)
    coords[~valid] = np.nan
    confidence[~np.isfinite(confidence)] = 0.0
    return CorrespondenceMap(axis=axis, coords=coords, valid=valid,
                             confidence=confidence)
