"""Evaluation metrics: Y-channel PSNR and SSIM with border shaving, dataset
aggregation, and the student/teacher similarity report.

Identical images have infinite PSNR; reports serialize that as a capped
100 dB with an ``identical`` flag so the JSON stays finite.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import convolve2d

from .errors import DataError, ShapeError, SizeError
from .imaging import quantize, shave_border, to_y_channel, validate_image

PSNR_CAP_DB = 100.0

_SSIM_K1 = 0.01
_SSIM_K2 = 0.03
_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5


def _as_y(img: np.ndarray) -> np.ndarray:
    """Accept RGB (converted) or an already-extracted Y channel (passed through)."""
    validate_image(img)
    if img.shape[2] == 3:
        return to_y_channel(img)
    return img


def psnr_y(a: np.ndarray, b: np.ndarray, shave: int = 0) -> float:
    """PSNR in dB on the Y channel after shaving, with MAX = 1.

    Returns math.inf for identical inputs; use cap_psnr for reporting.
    """
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    ya = shave_border(_as_y(a), shave).astype(np.float64)
    yb = shave_border(_as_y(b), shave).astype(np.float64)
    mse = float(np.mean((ya - yb) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def cap_psnr(value: float) -> float:
    return min(value, PSNR_CAP_DB)


def _gaussian_window(size: int = _SSIM_WINDOW, sigma: float = _SSIM_SIGMA) -> np.ndarray:
    half = (size - 1) / 2.0
    coords = np.arange(size, dtype=np.float64) - half
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    win = np.outer(g, g)
    return win / win.sum()


def ssim_y(a: np.ndarray, b: np.ndarray, shave: int = 0) -> float:
    """Single-scale SSIM on Y: 11x11 Gaussian window (sigma 1.5), K1=0.01,
    K2=0.03, dynamic range 1, mean over the valid (windowed) map."""
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    ya = shave_border(_as_y(a), shave)[:, :, 0].astype(np.float64)
    yb = shave_border(_as_y(b), shave)[:, :, 0].astype(np.float64)
    if min(ya.shape) < _SSIM_WINDOW:
        raise SizeError(f"image {ya.shape} smaller than the {_SSIM_WINDOW}x{_SSIM_WINDOW} window after shave")
    win = _gaussian_window()
    c1 = _SSIM_K1**2
    c2 = _SSIM_K2**2

    mu_a = convolve2d(ya, win, mode="valid")
    mu_b = convolve2d(yb, win, mode="valid")
    var_a = convolve2d(ya * ya, win, mode="valid") - mu_a**2
    var_b = convolve2d(yb * yb, win, mode="valid") - mu_b**2
    cov = convolve2d(ya * yb, win, mode="valid") - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


@dataclass
class MetricRecord:
    """One evaluated (dataset, method) row, serializable to the report schema."""

    dataset: str
    scale: int
    method: str
    psnr: float
    ssim: float
    n_images: int
    shave: int
    quantized: bool
    identical: bool = False

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "scale": self.scale,
            "method": self.method,
            "psnr": self.psnr,
            "ssim": self.ssim,
            "n_images": self.n_images,
            "shave": self.shave,
            "quantized": self.quantized,
            "identical": self.identical,
        }


@dataclass
class MetricReport:
    records: list[MetricRecord] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps([r.to_dict() for r in self.records], indent=2)


def prepare_sr_output(sr: np.ndarray, quantized: bool = True) -> np.ndarray:
    """Evaluation-domain output: clamp to [0, 1], optionally snap to 8-bit levels."""
    sr = np.clip(sr, 0.0, 1.0)
    return quantize(sr) if quantized else sr


def sr_forward_image(model, lr_img: np.ndarray) -> np.ndarray:
    """Run one HWC image through a model (batch of one), back to HWC, un-clamped."""
    x = lr_img.transpose(2, 0, 1)[None].astype(model.dtype)
    y = model.forward(x)
    return y[0].transpose(1, 2, 0)


def evaluate_pairs(model, pairs, dataset: str, scale: int, method: str,
                   shave: int | None = None, quantized: bool = True) -> MetricRecord:
    """Average PSNR/SSIM of a model over (lr, hr) pairs.

    shave defaults to the scale (SR benchmark convention).  Per-image PSNR is
    capped before averaging so identical outputs cannot poison the mean.
    """
    pairs = list(pairs)
    if not pairs:
        raise DataError(f"dataset {dataset!r} is empty")
    if shave is None:
        shave = scale
    psnrs, ssims = [], []
    all_identical = True
    for lr_img, hr_img in pairs:
        sr = prepare_sr_output(sr_forward_image(model, lr_img), quantized)
        p = psnr_y(sr, hr_img, shave)
        all_identical = all_identical and math.isinf(p)
        psnrs.append(cap_psnr(p))
        ssims.append(ssim_y(sr, hr_img, shave))
    return MetricRecord(
        dataset=dataset, scale=scale, method=method,
        psnr=float(np.mean(psnrs)), ssim=float(np.mean(ssims)),
        n_images=len(pairs), shave=shave, quantized=quantized,
        identical=all_identical,
    )


@dataclass
class SimilarityReport:
    """Average student-vs-teacher and student-vs-ground-truth PSNR on a split."""

    psnr_s_t: float
    psnr_s_gt: float
    split: str
    n_images: int

    def to_dict(self) -> dict:
        return {
            "psnr_s_t": self.psnr_s_t,
            "psnr_s_gt": self.psnr_s_gt,
            "split": self.split,
            "n_images": self.n_images,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def similarity_report(student, teacher, pairs, split: str,
                      shave: int | None = None, quantized: bool = True) -> SimilarityReport:
    """Fidelity-vs-mimicry report: PSNR(student, teacher) and PSNR(student, GT).

    Per-image values are capped at 100 dB (identical outputs) before averaging.
    """
    pairs = list(pairs)
    if not pairs:
        raise DataError("similarity report over an empty dataset")
    if student.config.scale != teacher.config.scale:
        raise ShapeError(
            f"student scale {student.config.scale} != teacher scale {teacher.config.scale}"
        )
    if shave is None:
        shave = student.config.scale
    st, sgt = [], []
    for lr_img, hr_img in pairs:
        s_out = prepare_sr_output(sr_forward_image(student, lr_img), quantized)
        t_out = prepare_sr_output(sr_forward_image(teacher, lr_img), quantized)
        st.append(cap_psnr(psnr_y(s_out, t_out, shave)))
        sgt.append(cap_psnr(psnr_y(s_out, hr_img, shave)))
    return SimilarityReport(
        psnr_s_t=float(np.mean(st)), psnr_s_gt=float(np.mean(sgt)),
        split=split, n_images=len(pairs),
    )
