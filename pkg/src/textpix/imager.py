"""Turn fixed-length float vectors into 8-bit images and report compression.

The pipeline is min-max normalization to [0, 1], scaling by 255 with a
truncating uint8 cast, and a row-major reshape onto a predefined grid.
Images serialize as binary PGM (P5) for grayscale and PPM (P6) for RGB;
the payload byte count equals the pixel count, which is what the memory
report compares against conventional text and embedding storage.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class ImageSpec:
    rows: int
    cols: int
    channels: int = 1

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("image dimensions must be positive")
        if self.channels not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {self.channels}")

    @property
    def n_values(self) -> int:
        return self.rows * self.cols * self.channels


@dataclass
class PixelImage:
    spec: ImageSpec
    pixels: np.ndarray  # [rows, cols] or [rows, cols, 3], uint8

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.uint8)
        expected = (self.spec.rows, self.spec.cols)
        if self.spec.channels == 3:
            expected += (3,)
        if self.pixels.shape != expected:
            raise ValueError(f"pixel grid {self.pixels.shape} does not match "
                             f"spec {expected}")

    def flatten(self) -> np.ndarray:
        return self.pixels.reshape(-1)


def normalize(vector: np.ndarray) -> np.ndarray:
    """Min-max normalize to [0, 1]; a constant vector maps to all zeros."""
    vector = np.asarray(vector, dtype=np.float64)
    if vector.size == 0:
        raise ValueError("cannot normalize an empty vector")
    if not np.isfinite(vector).all():
        raise ValueError("cannot normalize non-finite values")
    low, high = vector.min(), vector.max()
    if high == low:
        return np.zeros_like(vector)
    return (vector - low) / (high - low)


def scale_quantize(normalized: np.ndarray, rounding: str = "truncate"
                   ) -> np.ndarray:
    """Scale [0, 1] values by 255 and cast to uint8 (truncation by default)."""
    scaled = np.asarray(normalized, dtype=np.float64) * 255.0
    if rounding == "truncate":
        return scaled.astype(np.uint8)
    if rounding == "nearest":
        return np.rint(scaled).astype(np.uint8)
    raise ValueError(f"unknown rounding mode {rounding!r}")


def reshape(values: np.ndarray, spec: ImageSpec) -> PixelImage:
    """Row-major fill of the image grid; size must match the spec exactly."""
    values = np.asarray(values, dtype=np.uint8).reshape(-1)
    if values.size != spec.n_values:
        raise ValueError(f"{values.size} values cannot fill a "
                         f"{spec.rows}x{spec.cols}x{spec.channels} image")
    if spec.channels == 3:
        grid = values.reshape(spec.rows, spec.cols, 3)
    else:
        grid = values.reshape(spec.rows, spec.cols)
    return PixelImage(spec, grid)


def vector_to_image(vector: np.ndarray, spec: ImageSpec,
                    rounding: str = "truncate") -> PixelImage:
    return reshape(scale_quantize(normalize(vector), rounding), spec)


class ImageFormatError(ValueError):
    pass


def write_image(image: PixelImage, path) -> None:
    """Binary PGM (P5) for grayscale, PPM (P6) for RGB; maxval 255."""
    magic = b"P6" if image.spec.channels == 3 else b"P5"
    header = b"%s\n%d %d\n255\n" % (magic, image.spec.cols, image.spec.rows)
    Path(path).write_bytes(header + image.pixels.tobytes())


def read_image(path) -> PixelImage:
    data = Path(path).read_bytes()
    stream = io.BytesIO(data)
    magic = stream.read(2)
    if magic not in (b"P5", b"P6"):
        raise ImageFormatError(f"{path}: unsupported magic {magic!r}")

    def next_token():
        token = b""
        while True:
            c = stream.read(1)
            if not c:
                raise ImageFormatError(f"{path}: truncated header")
            if c.isspace():
                if token:
                    return token
                continue
            token += c

    cols, rows, maxval = (int(next_token()) for _ in range(3))
    if maxval != 255:
        raise ImageFormatError(f"{path}: expected maxval 255, got {maxval}")
    channels = 3 if magic == b"P6" else 1
    payload = stream.read()
    expected = rows * cols * channels
    if len(payload) != expected:
        raise ImageFormatError(f"{path}: payload is {len(payload)} bytes, "
                               f"expected {expected}")
    spec = ImageSpec(rows, cols, channels)
    return reshape(np.frombuffer(payload, dtype=np.uint8), spec)


FLOAT32_BYTES = 4


@dataclass
class MemoryRow:
    representation: str
    conventional_bytes: float
    image_bytes: int
    compression_percent: float
    note: str


def memory_report(spec: ImageSpec, avg_text_chars: float = 2123.57,
                  token_count: int = 512,
                  word_dims: tuple[int, ...] = (300, 768)) -> list[MemoryRow]:
    """Compare the image payload against conventional representations.

    All figures are first-principles arithmetic: one byte per text character,
    four bytes per float32 embedding component, one byte per pixel.
    """
    image_bytes = spec.n_values

    def row(name, conventional, note):
        percent = (1.0 - image_bytes / conventional) * 100.0
        return MemoryRow(name, conventional, image_bytes, percent, note)

    rows = [
        row("plain_text", avg_text_chars,
            f"average {avg_text_chars} chars at 1 byte each"),
    ]
    for dims in word_dims:
        conventional = token_count * dims * FLOAT32_BYTES
        rows.append(row(
            f"word_embeddings_{dims}d", conventional,
            f"{token_count} tokens x {dims} dims x {FLOAT32_BYTES} bytes"))
    rows.append(row(
        "sequence_embedding_float32", spec.n_values * FLOAT32_BYTES,
        f"{spec.n_values} dims x {FLOAT32_BYTES} bytes"))
    rows.append(row(
        "rgb_pixel_encoding", spec.n_values * 3,
        f"{spec.n_values} pixels x 3 channels"))
    return rows


def write_memory_report(path, rows: list[MemoryRow]) -> None:
    lines = ["representation,conventional_bytes,image_bytes,"
             "compression_percent,note"]
    for r in rows:
        lines.append(f"{r.representation},{r.conventional_bytes!r},"
                     f"{r.image_bytes},{r.compression_percent!r},{r.note}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def intensity_histogram(image: PixelImage) -> np.ndarray:
    """256-bin histogram of pixel intensities."""
    return np.bincount(image.flatten(), minlength=256)


def mean_absolute_pixel_difference(a: PixelImage, b: PixelImage) -> float:
    if a.spec != b.spec:
        raise ValueError("images must share a spec to be compared")
    return float(np.mean(np.abs(a.flatten().astype(np.int64)
                                - b.flatten().astype(np.int64))))
