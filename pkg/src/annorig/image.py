"""8-bit grayscale frames, PGM (P5) files, and sub-pixel sampling."""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FRAME_NAME_FORMAT = "frame_{:06d}.pgm"
_FRAME_NAME_RE = re.compile(r"frame_(\d{6})\.pgm$")


@dataclass(frozen=True)
class ImageFrame:
    """Row-major 8-bit grayscale raster with a sequence index."""

    pixels: np.ndarray
    frame_index: int = 0

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValueError(f"pixels must be 2D (height, width), got {px.shape}")
        if px.dtype != np.uint8:
            px = px.astype(np.uint8)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def as_float(self) -> np.ndarray:
        return self.pixels.astype(np.float64)


def write_pgm(frame: ImageFrame, path: str | Path) -> None:
    """Binary PGM, maxval 255."""
    header = f"P5\n{frame.width} {frame.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + frame.pixels.tobytes())


def read_pgm(path: str | Path, frame_index: int = 0) -> ImageFrame:
    data = Path(path).read_bytes()
    # header: magic, width, height, maxval; '#' comments allowed between tokens
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 255:
        raise ValueError(f"{path}: only maxval 255 supported, got {maxval}")
    pos += 1  # single whitespace after maxval
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
    return ImageFrame(pixels.reshape(height, width), frame_index=frame_index)


def write_frame_sequence(frames: list[ImageFrame], directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for frame in frames:
        write_pgm(frame, directory / FRAME_NAME_FORMAT.format(frame.frame_index))


def read_frame_sequence(directory: str | Path) -> list[ImageFrame]:
    """Frames named frame_%06d.pgm, ordered by index."""
    entries = []
    for path in Path(directory).iterdir():
        m = _FRAME_NAME_RE.search(path.name)
        if m:
            entries.append((int(m.group(1)), path))
    entries.sort()
    return [read_pgm(path, frame_index=idx) for idx, path in entries]


def bilinear_sample(image: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Sample a float image at sub-pixel (x, y); coordinates are clipped to
    the valid interpolation domain, so callers must pre-check bounds when
    clipping would be wrong."""
    h, w = image.shape
    x = np.clip(np.asarray(x, dtype=float), 0.0, w - 1.000001)
    y = np.clip(np.asarray(y, dtype=float), 0.0, h - 1.000001)
    x0 = np.floor(x).astype(int)
    y0 = np.floor(y).astype(int)
    fx = x - x0
    fy = y - y0
    top = image[y0, x0] * (1 - fx) + image[y0, x0 + 1] * fx
    bottom = image[y0 + 1, x0] * (1 - fx) + image[y0 + 1, x0 + 1] * fx
    return top * (1 - fy) + bottom * fy
