"""Upcycled training inputs: zoom-in crops of HR and zoom-out downsamples of LR.

Both carry teacher-only supervision downstream -- there is no ground truth
for them.  The original LR is retained as the reconstruction target for the
student's output on the zoom-out input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivisibilityError, ShapeError
from .imaging import bicubic_down, random_crop, validate_image


@dataclass
class TrainingPair:
    """An (LR, HR) image pair with hr exactly scale x the lr size."""

    lr: np.ndarray
    hr: np.ndarray
    scale: int

    def __post_init__(self):
        validate_image(self.lr)
        validate_image(self.hr)
        if self.scale < 2:
            raise ShapeError(f"scale must be >= 2, got {self.scale}")
        eh, ew = self.scale * self.lr.shape[0], self.scale * self.lr.shape[1]
        if self.hr.shape[0] != eh or self.hr.shape[1] != ew:
            raise ShapeError(
                f"hr {self.hr.shape[:2]} != scale*lr ({eh}, {ew}) at scale {self.scale}"
            )


@dataclass
class UpcycledBatch:
    """Auxiliary inputs derived from one pair.

    zoom_in is always present; zoom_out only when enabled and the LR is
    divisible by the scale.  lr_ref is the original LR, the reconstruction
    target paired with the zoom-out input.
    """

    zoom_in: np.ndarray
    lr_ref: np.ndarray
    zoom_out: np.ndarray | None = None


def zoom_in(pair: TrainingPair, rng: np.random.Generator) -> np.ndarray:
    """Random HR crop with exactly the LR's spatial size (a new LR-role input)."""
    crop, _ = random_crop(pair.hr, pair.lr.shape[0], pair.lr.shape[1], rng)
    return crop


def zoom_out(pair: TrainingPair) -> np.ndarray:
    """Downsample the LR once more with the dataset degradation; deterministic."""
    h, w = pair.lr.shape[:2]
    if h % pair.scale or w % pair.scale:
        raise DivisibilityError(
            f"lr {h}x{w} not divisible by scale {pair.scale}; crop upstream"
        )
    return bicubic_down(pair.lr, pair.scale)


def build_upcycled_batch(
    pair: TrainingPair, enable_zoom_out: bool, rng: np.random.Generator
) -> UpcycledBatch:
    """Build zoom-in (always) and zoom-out (when enabled) for one pair."""
    zi = zoom_in(pair, rng)
    zo = zoom_out(pair) if enable_zoom_out else None
    return UpcycledBatch(zoom_in=zi, lr_ref=pair.lr, zoom_out=zo)
