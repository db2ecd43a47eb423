"""Pixel-grid primitives: value domain, color conversion, bicubic resampling, crops.

Images are plain numpy arrays of shape (H, W, C) with C in {1, 3}, holding
floats in [0, 1].  8-bit sources are normalized by dividing by 255.  All
functions are pure; the only stateful object anywhere is a caller-supplied
``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import DivisibilityError, ShapeError, SizeError

DEFAULT_DTYPE = np.float32

# BT.601 full-range RGB -> studio-swing luma, the conversion used throughout
# the SR benchmark literature (values are the 256-denominator coefficients).
_Y_COEF = (65.738, 129.057, 25.064)
_Y_OFFSET = 16.0


def validate_image(img: np.ndarray) -> np.ndarray:
    """Check the (H, W, C) contract and return the array unchanged."""
    if not isinstance(img, np.ndarray) or img.ndim != 3:
        raise ShapeError(f"expected (H, W, C) array, got {getattr(img, 'shape', type(img))}")
    if img.shape[2] not in (1, 3):
        raise ShapeError(f"expected 1 or 3 channels, got {img.shape[2]}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ShapeError(f"degenerate spatial dimensions {img.shape[:2]}")
    return img


def from_uint8(arr: np.ndarray, dtype=DEFAULT_DTYPE) -> np.ndarray:
    """Normalize an 8-bit (H, W, C) or (H, W) array to floats in [0, 1]."""
    if arr.ndim == 2:
        arr = arr[:, :, None]
    dtype = np.dtype(dtype).type
    return arr.astype(dtype) / dtype(255.0)


def to_uint8(img: np.ndarray) -> np.ndarray:
    """Clamp to [0, 1] and quantize to 8 bits (round half away from zero, like PIL)."""
    return np.clip(np.rint(np.clip(img, 0.0, 1.0) * 255.0), 0, 255).astype(np.uint8)


def quantize(img: np.ndarray) -> np.ndarray:
    """Round to the nearest 8-bit level, staying in the normalized float domain."""
    dtype = img.dtype if img.dtype in (np.float32, np.float64) else DEFAULT_DTYPE
    return from_uint8(to_uint8(img), dtype)


def load_png(path, dtype=DEFAULT_DTYPE) -> np.ndarray:
    """Read an 8-bit PNG (or any PIL-readable image) as a normalized RGB array."""
    with Image.open(path) as im:
        rgb = im.convert("RGB")
        return from_uint8(np.asarray(rgb, dtype=np.uint8), dtype)


def save_png(img: np.ndarray, path) -> None:
    validate_image(img)
    arr = to_uint8(img)
    if arr.shape[2] == 1:
        arr = arr[:, :, 0]
    Image.fromarray(arr).save(path)


def to_y_channel(img: np.ndarray) -> np.ndarray:
    """Convert a 3-channel [0,1] image to the BT.601 studio-swing Y channel.

    Y = (65.738 R + 129.057 G + 25.064 B + 16) / 256, so the output lies in
    [16/256, 235.859/256].  Single-channel input is rejected: Y-channel
    derivatives must be produced from RGB exactly once.
    """
    validate_image(img)
    if img.shape[2] != 3:
        raise ShapeError(f"to_y_channel requires 3 channels, got {img.shape[2]}")
    r, g, b = img[:, :, 0], img[:, :, 1], img[:, :, 2]
    y = (_Y_COEF[0] * r + _Y_COEF[1] * g + _Y_COEF[2] * b + _Y_OFFSET) / 256.0
    return y[:, :, None].astype(img.dtype)


@dataclass(frozen=True)
class ResampleSpec:
    """Bicubic resampling request: integer scale, direction, antialias toggle."""

    scale: int
    direction: str  # "down" | "up"
    antialias: bool = True

    def __post_init__(self):
        if self.scale < 2:
            raise ValueError(f"scale must be >= 2, got {self.scale}")
        if self.direction not in ("down", "up"):
            raise ValueError(f"direction must be 'down' or 'up', got {self.direction!r}")


def _cubic(x: np.ndarray, a: float = -0.5) -> np.ndarray:
    """Cubic convolution kernel with the Catmull-Rom-style a parameter."""
    ax = np.abs(x)
    ax2 = ax * ax
    ax3 = ax2 * ax
    inner = (a + 2.0) * ax3 - (a + 3.0) * ax2 + 1.0
    outer = a * ax3 - 5.0 * a * ax2 + 8.0 * a * ax - 4.0 * a
    return np.where(ax <= 1.0, inner, np.where(ax < 2.0, outer, 0.0))


def _contributions(in_len: int, out_len: int, antialias: bool):
    """Per-output-pixel source indices and normalized kernel weights.

    Follows the reference benchmark resizer: the output grid maps to input
    coordinates via u = x/scale + 0.5(1 - 1/scale) (1-based), the kernel is
    widened by 1/scale when downscaling with antialias, and out-of-range
    indices fold back symmetrically with the edge sample repeated.
    """
    scale = out_len / in_len
    kernel_width = 4.0
    if scale < 1.0 and antialias:
        kernel_width /= scale
    x = np.arange(1, out_len + 1, dtype=np.float64)
    u = x / scale + 0.5 * (1.0 - 1.0 / scale)
    left = np.floor(u - kernel_width / 2.0)
    taps = int(math.ceil(kernel_width)) + 2
    idx = left[:, None] + np.arange(taps, dtype=np.float64)[None, :]
    dist = u[:, None] - idx
    if scale < 1.0 and antialias:
        weights = scale * _cubic(dist * scale)
    else:
        weights = _cubic(dist)
    weights /= weights.sum(axis=1, keepdims=True)
    aux = np.concatenate([np.arange(1, in_len + 1), np.arange(in_len, 0, -1)])
    idx = aux[np.mod(idx.astype(np.int64) - 1, 2 * in_len)] - 1
    keep = np.nonzero(np.any(weights != 0.0, axis=0))[0]
    return idx[:, keep], weights[:, keep]


def _resample_axis(arr: np.ndarray, out_len: int, antialias: bool, axis: int) -> np.ndarray:
    idx, weights = _contributions(arr.shape[axis], out_len, antialias)
    gathered = np.take(arr, idx, axis=axis)  # axis dim -> (out_len, taps)
    weights = weights.reshape(weights.shape + (1,) * (arr.ndim - 1 - axis))
    return (gathered * weights).sum(axis=axis + 1)


def bicubic_resize(img: np.ndarray, spec: ResampleSpec) -> np.ndarray:
    """Separable bicubic resize (a = -0.5), clamped to [0, 1].

    Downscaling requires both dimensions divisible by the scale and applies
    antialias kernel widening per the spec; upscaling accepts any size.
    """
    validate_image(img)
    h, w = img.shape[:2]
    if spec.direction == "down":
        if h % spec.scale or w % spec.scale:
            raise DivisibilityError(
                f"{h}x{w} not divisible by scale {spec.scale}; crop first"
            )
        out_h, out_w = h // spec.scale, w // spec.scale
    else:
        out_h, out_w = h * spec.scale, w * spec.scale
    work = img.astype(np.float64, copy=False)
    work = _resample_axis(work, out_h, spec.antialias, axis=0)
    work = _resample_axis(work, out_w, spec.antialias, axis=1)
    return np.clip(work, 0.0, 1.0).astype(img.dtype)


def bicubic_down(img: np.ndarray, scale: int) -> np.ndarray:
    return bicubic_resize(img, ResampleSpec(scale, "down", antialias=True))


def bicubic_up(img: np.ndarray, scale: int) -> np.ndarray:
    return bicubic_resize(img, ResampleSpec(scale, "up", antialias=False))


def random_crop(img: np.ndarray, h: int, w: int, rng: np.random.Generator):
    """Copy a random h x w window; returns (crop, (top, left)).

    The offset is uniform over all valid positions and fully determined by
    the generator state.
    """
    validate_image(img)
    if h > img.shape[0] or w > img.shape[1]:
        raise SizeError(f"crop {h}x{w} exceeds image {img.shape[0]}x{img.shape[1]}")
    top = int(rng.integers(0, img.shape[0] - h + 1))
    left = int(rng.integers(0, img.shape[1] - w + 1))
    return img[top : top + h, left : left + w].copy(), (top, left)


def center_crop(img: np.ndarray, h: int, w: int) -> np.ndarray:
    validate_image(img)
    if h > img.shape[0] or w > img.shape[1]:
        raise SizeError(f"crop {h}x{w} exceeds image {img.shape[0]}x{img.shape[1]}")
    top = (img.shape[0] - h) // 2
    left = (img.shape[1] - w) // 2
    return img[top : top + h, left : left + w].copy()


def mod_crop_center(img: np.ndarray, scale: int) -> np.ndarray:
    """Center-crop to the largest size divisible by scale (dataset ingestion rule)."""
    validate_image(img)
    h = img.shape[0] - img.shape[0] % scale
    w = img.shape[1] - img.shape[1] % scale
    if h < scale or w < scale:
        raise SizeError(f"image {img.shape[:2]} too small for scale {scale}")
    return center_crop(img, h, w)


def shave_border(img: np.ndarray, pixels: int) -> np.ndarray:
    """Drop a border of `pixels` on every side (SR metric convention)."""
    validate_image(img)
    if pixels < 0:
        raise SizeError(f"negative shave {pixels}")
    if pixels == 0:
        return img
    if 2 * pixels >= min(img.shape[0], img.shape[1]):
        raise SizeError(f"shave {pixels} consumes the whole {img.shape[:2]} image")
    return img[pixels:-pixels, pixels:-pixels]
