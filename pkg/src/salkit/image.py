"""Image containers, PNM I/O, sRGB to CIELab conversion, and bilinear resizing.

All pixel data is kept as float64 in [0, 1]. The only on-disk formats are
binary PNM (P5 grayscale / P6 color, maxval 255 or 65535), which keeps I/O
header-only and bit-exact. Images are immutable once constructed; every
operation here is a pure function.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# sRGB -> XYZ (D65, 2 degree observer) and the matching white point.
_SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_WHITE_D65 = np.array([0.95047, 1.0, 1.08883])


class PnmParseError(ValueError):
    """Raised for malformed or truncated PNM files; carries the byte offset."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


def _freeze(arr):
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RasterImage:
    """A width x height raster with 1 or 3 channels of intensities in [0, 1].

    ``pixels`` has shape (height, width, channels), row-major, float64.
    """

    pixels: np.ndarray

    def __post_init__(self):
        px = self.pixels
        if px.ndim != 3 or px.shape[2] not in (1, 3):
            raise ValueError(f"expected (h, w, 1|3) pixel array, got shape {px.shape}")
        if not np.all(np.isfinite(px)):
            raise ValueError("pixel values must be finite")
        if px.min() < 0.0 or px.max() > 1.0:
            raise ValueError("pixel values must lie in [0, 1]")
        object.__setattr__(self, "pixels", _freeze(px))

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def channels(self):
        return self.pixels.shape[2]


@dataclass(frozen=True)
class LabImage:
    """CIELab pixels rescaled channel-wise into [0, 1].

    The rescaling is L/100, (a+128)/255, (b+128)/255 applied after the
    standard conversion, so that color distances and the RBF kernel scale
    live in a comparable unit range.
    """

    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if v.ndim != 3 or v.shape[2] != 3:
            raise ValueError(f"expected (h, w, 3) Lab array, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("Lab values must be finite")
        if v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("normalized Lab values must lie in [0, 1]")
        object.__setattr__(self, "values", _freeze(v))

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]


def quantize_levels(values, maxval):
    """Map [0, 1] floats to integer levels 0..maxval, rounding half up.

    Shared by the PGM writer and the metric binarizer so that a written map
    and an in-memory map binarize identically.
    """
    return np.floor(np.asarray(values, dtype=np.float64) * maxval + 0.5).astype(np.int64)


def _next_token(data, pos):
    # Skip whitespace and '#' comments, then collect one header token.
    n = len(data)
    while pos < n:
        c = data[pos]
        if c in b" \t\r\n":
            pos += 1
        elif c == ord("#"):
            while pos < n and data[pos] not in b"\r\n":
                pos += 1
        else:
            break
    if pos >= n:
        raise PnmParseError("unexpected end of header", pos)
    start = pos
    while pos < n and data[pos] not in b" \t\r\n":
        pos += 1
    return data[start:pos], pos


def read_pnm(path):
    """Read a binary P5 (grayscale) or P6 (color) file as a RasterImage.

    Intensities are scaled to [0, 1] by dividing by the file's maxval
    (255 or 65535; 16-bit samples are big-endian per the PNM spec).
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 2:
        raise PnmParseError("file too short for a PNM magic", 0)
    magic = data[:2]
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise PnmParseError(f"unsupported magic {magic!r}", 0)

    pos = 2
    fields = []
    for _ in range(3):
        tok, pos = _next_token(data, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise PnmParseError(f"non-numeric header field {tok!r}", pos - len(tok)) from None
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise PnmParseError(f"invalid dimensions {width}x{height}", 2)
    if maxval not in (255, 65535):
        raise PnmParseError(f"unsupported maxval {maxval}", pos)
    # Exactly one whitespace byte separates the header from the raster.
    if pos >= len(data) or data[pos] not in b" \t\r\n":
        raise PnmParseError("missing whitespace after maxval", pos)
    pos += 1

    dtype = np.dtype(">u2") if maxval == 65535 else np.dtype("u1")
    count = width * height * channels
    body = data[pos : pos + count * dtype.itemsize]
    if len(body) < count * dtype.itemsize:
        raise PnmParseError(
            f"truncated raster: need {count * dtype.itemsize} bytes, have {len(body)}",
            pos + len(body),
        )
    raw = np.frombuffer(body, dtype=dtype).astype(np.float64)
    pixels = (raw / maxval).reshape(height, width, channels)
    return RasterImage(pixels)


def write_pgm(image, path, depth=8):
    """Write a single-channel RasterImage as binary P5 at 8 or 16 bits.

    Values are rounded to the nearest representable level; the companion
    reader recovers them to within half a quantization step.
    """
    if image.channels != 1:
        raise ValueError(f"write_pgm needs a single-channel image, got {image.channels}")
    if depth not in (8, 16):
        raise ValueError(f"depth must be 8 or 16, got {depth}")
    maxval = 255 if depth == 8 else 65535
    levels = quantize_levels(image.pixels[:, :, 0], maxval)
    out = levels.astype("u1" if depth == 8 else ">u2")
    header = f"P5\n{image.width} {image.height}\n{maxval}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(out.tobytes())


def srgb_to_lab(image):
    """Convert a 3-channel sRGB RasterImage to a range-normalized LabImage.

    Standard pipeline: sRGB gamma expansion, the D65 XYZ matrix, then CIELab;
    finally L/100, (a+128)/255, (b+128)/255, clamped to [0, 1].
    """
    if image.channels != 3:
        raise ValueError(f"srgb_to_lab needs 3 channels, got {image.channels}")
    rgb = image.pixels
    linear = np.where(rgb <= 0.04045, rgb / 12.92, ((rgb + 0.055) / 1.055) ** 2.4)
    xyz = linear @ _SRGB_TO_XYZ.T
    t = xyz / _WHITE_D65
    delta = 6.0 / 29.0
    f = np.where(t > delta**3, np.cbrt(t), t / (3.0 * delta * delta) + 4.0 / 29.0)
    lab = np.empty_like(xyz)
    lab[:, :, 0] = 116.0 * f[:, :, 1] - 16.0
    lab[:, :, 1] = 500.0 * (f[:, :, 0] - f[:, :, 1])
    lab[:, :, 2] = 200.0 * (f[:, :, 1] - f[:, :, 2])
    lab[:, :, 0] /= 100.0
    lab[:, :, 1] = (lab[:, :, 1] + 128.0) / 255.0
    lab[:, :, 2] = (lab[:, :, 2] + 128.0) / 255.0
    return LabImage(np.clip(lab, 0.0, 1.0))


def _sample_axis(n_out, n_in):
    # Corner-aligned sampling: output pixel i reads input coordinate
    # i*(n_in-1)/(n_out-1); a single-pixel output reads coordinate 0.
    if n_out == 1:
        return np.zeros(1)
    return np.arange(n_out) * ((n_in - 1) / (n_out - 1))


def resize_bilinear(image, new_w, new_h):
    """Resize with bilinear interpolation, corner-aligned, edge-clamped."""
    if new_w < 1 or new_h < 1:
        raise ValueError(f"target size must be positive, got {new_w}x{new_h}")
    px = image.pixels
    h, w = px.shape[:2]
    if (new_w, new_h) == (w, h):
        return RasterImage(px.copy())

    xs = np.clip(_sample_axis(new_w, w), 0.0, w - 1.0)
    ys = np.clip(_sample_axis(new_h, h), 0.0, h - 1.0)
    x0 = np.floor(xs).astype(int)
    y0 = np.floor(ys).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (xs - x0)[None, :, None]
    fy = (ys - y0)[:, None, None]

    top = px[y0][:, x0] * (1.0 - fx) + px[y0][:, x1] * fx
    bot = px[y1][:, x0] * (1.0 - fx) + px[y1][:, x1] * fx
    out = top * (1.0 - fy) + bot * fy
    return RasterImage(np.clip(out, 0.0, 1.0))
