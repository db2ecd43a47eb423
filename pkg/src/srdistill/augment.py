"""Invertible augmentation algebra: flips, right-angle rotations, color inversion.

Every kind has an exact inverse on the pixel grid.  Geometric kinds permute
pixel positions only; color inversion maps values only.  Rotations are
counter-clockwise.
"""

from __future__ import annotations

import enum

import numpy as np

from .errors import ConfigError


class Augmentation(enum.Enum):
    IDENTITY = "identity"
    HFLIP = "hflip"
    VFLIP = "vflip"
    ROT90 = "rot90"
    ROT180 = "rot180"
    ROT270 = "rot270"
    COLOR_INVERSION = "color_inversion"


NON_IDENTITY = (
    Augmentation.HFLIP,
    Augmentation.VFLIP,
    Augmentation.ROT90,
    Augmentation.ROT180,
    Augmentation.ROT270,
    Augmentation.COLOR_INVERSION,
)

GEOMETRIC = NON_IDENTITY[:5]

_INVERSE = {
    Augmentation.IDENTITY: Augmentation.IDENTITY,
    Augmentation.HFLIP: Augmentation.HFLIP,
    Augmentation.VFLIP: Augmentation.VFLIP,
    Augmentation.ROT90: Augmentation.ROT270,
    Augmentation.ROT180: Augmentation.ROT180,
    Augmentation.ROT270: Augmentation.ROT90,
    Augmentation.COLOR_INVERSION: Augmentation.COLOR_INVERSION,
}


def _invert_values(img: np.ndarray) -> np.ndarray:
    # Computed as (255 - 255*x)/255 rather than 1 - x: on 8-bit-derived values
    # k/255 this is a bit-exact involution in float32 and float64, whereas the
    # direct subtraction round-trips inexactly for roughly half the lattice.
    one = img.dtype.type(255.0)
    return (one - img * one) / one


def apply(aug: Augmentation, img: np.ndarray, hw_axes: tuple[int, int] = (0, 1)) -> np.ndarray:
    """Apply an augmentation; `hw_axes` selects the spatial axes (HWC default, (2, 3) for NCHW)."""
    if aug is Augmentation.IDENTITY:
        return img.copy()
    if aug is Augmentation.HFLIP:
        return np.flip(img, axis=hw_axes[1]).copy()
    if aug is Augmentation.VFLIP:
        return np.flip(img, axis=hw_axes[0]).copy()
    if aug is Augmentation.ROT90:
        return np.rot90(img, 1, axes=hw_axes).copy()
    if aug is Augmentation.ROT180:
        return np.rot90(img, 2, axes=hw_axes).copy()
    if aug is Augmentation.ROT270:
        return np.rot90(img, 3, axes=hw_axes).copy()
    if aug is Augmentation.COLOR_INVERSION:
        return _invert_values(img)
    raise ConfigError(f"unknown augmentation {aug!r}")


def invert(aug: Augmentation, img: np.ndarray, hw_axes: tuple[int, int] = (0, 1)) -> np.ndarray:
    """Apply the exact inverse of `aug`."""
    return apply(_INVERSE[aug], img, hw_axes=hw_axes)


def inverse_kind(aug: Augmentation) -> Augmentation:
    return _INVERSE[aug]


def sample(rng: np.random.Generator, pool=NON_IDENTITY) -> Augmentation:
    """Uniform draw from a non-empty pool of kinds."""
    pool = tuple(pool)
    if not pool:
        raise ConfigError("augmentation pool is empty")
    return pool[int(rng.integers(0, len(pool)))]
