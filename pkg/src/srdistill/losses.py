"""Training objectives: reconstruction, response distillation, upcycled-data
distillation, zoom-out reconstruction, and inverse-augmented consistency.

Every term is a mean L1 (mean, not sum, so the loss weights are
scale-free).  All functions take un-clamped model outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .augment import Augmentation, apply, invert
from .errors import ConfigError, ShapeError


@dataclass(frozen=True)
class LossWeights:
    lambda_kd: float = 1.0
    lambda_dukd: float = 1.0
    lambda_lc: float = 1.0

    def __post_init__(self):
        for name in ("lambda_kd", "lambda_dukd", "lambda_lc"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ConfigError(f"{name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class LossReport:
    """Per-step scalar components; total = rec + kd*l_kd + dukd*l_dukd + lc*l_lc."""

    rec: float
    kd: float
    dukd: float
    lc: float
    total: float

    def to_dict(self) -> dict:
        return {"rec": self.rec, "kd": self.kd, "dukd": self.dukd, "lc": self.lc, "total": self.total}


def _check_shapes(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")


def l1(a: np.ndarray, b: np.ndarray) -> float:
    """Mean absolute difference over all elements."""
    _check_shapes(a, b)
    return float(np.mean(np.abs(a - b)))


def l1_grad(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """d l1(a, b) / d a, i.e. sign(a - b) / a.size."""
    _check_shapes(a, b)
    return np.sign(a - b) / a.dtype.type(a.size)


def dukd_loss(
    student_out_zi: np.ndarray,
    teacher_out_zi: np.ndarray,
    student_out_zo: np.ndarray | None = None,
    teacher_out_zo: np.ndarray | None = None,
) -> float:
    """Sum of the zoom-in and (when present) zoom-out teacher-matching terms."""
    if (student_out_zo is None) != (teacher_out_zo is None):
        raise ShapeError("zoom-out student/teacher outputs must be given together")
    value = l1(student_out_zi, teacher_out_zi)
    if student_out_zo is not None:
        value += l1(student_out_zo, teacher_out_zo)
    return value


def zoom_out_rec_loss(student_out_zo: np.ndarray, lr_ref: np.ndarray) -> float:
    """Reconstruction of the original LR from the student's zoom-out output."""
    return l1(student_out_zo, lr_ref)


def consistency_loss(
    student, teacher_out: np.ndarray, inputs: np.ndarray, aug: Augmentation
) -> float:
    """Label-consistency term on an NCHW batch.

    The student sees the augmented input; its output is inverse-augmented and
    compared (mean L1) against the teacher's output on the clean input.  Only
    the student path carries gradient during training.
    """
    perturbed = apply(aug, inputs, hw_axes=(2, 3))
    out = student.forward(perturbed)
    restored = invert(aug, out, hw_axes=(2, 3))
    return l1(restored, teacher_out)


def consistency_grad_to_student_out(aug: Augmentation, grad_restored: np.ndarray) -> np.ndarray:
    """Pull a gradient on the inverse-augmented output back to the raw student output.

    Geometric inverses are pixel permutations, so the transpose is the forward
    permutation; color inversion's linear part is -1.
    """
    if aug is Augmentation.COLOR_INVERSION:
        return -grad_restored
    return apply(aug, grad_restored, hw_axes=(2, 3))


def total_loss(rec: float, kd: float, dukd: float, lc: float, weights: LossWeights) -> LossReport:
    """Weighted sum of the step's components."""
    total = rec + weights.lambda_kd * kd + weights.lambda_dukd * dukd + weights.lambda_lc * lc
    return LossReport(rec=rec, kd=kd, dukd=dukd, lc=lc, total=total)
