"""Independent direct-convolution bicubic oracle.

Deliberately naive: per-output-pixel python loops, its own kernel evaluation,
its own symmetric index fold.  Shares no code with srdistill.imaging so it
can serve as the ground truth for the vectorized resizer.
"""

import math

import numpy as np


def kernel(x: float, a: float = -0.5) -> float:
    ax = abs(x)
    if ax <= 1.0:
        return (a + 2.0) * ax**3 - (a + 3.0) * ax**2 + 1.0
    if ax < 2.0:
        return a * ax**3 - 5.0 * a * ax**2 + 8.0 * a * ax - 4.0 * a
    return 0.0


def _fold(j: int, n: int) -> int:
    """Symmetric extension with the edge sample repeated: ...2,1,0 | 0,1,2..."""
    period = 2 * n
    j = j % period
    if j < 0:
        j += period
    return j if j < n else period - 1 - j


def _resample_1d(signal: np.ndarray, out_len: int, antialias: bool) -> np.ndarray:
    in_len = signal.shape[0]
    scale = out_len / in_len
    width = 4.0
    if scale < 1.0 and antialias:
        width = 4.0 / scale
    taps = int(math.ceil(width)) + 2
    out = np.zeros(out_len, dtype=np.float64)
    for o in range(out_len):
        u = (o + 1) / scale + 0.5 * (1.0 - 1.0 / scale)  # 1-based center
        left = math.floor(u - width / 2.0)
        acc = 0.0
        wsum = 0.0
        for t in range(taps):
            j = left + t  # 1-based tap position
            if scale < 1.0 and antialias:
                w = scale * kernel((u - j) * scale)
            else:
                w = kernel(u - j)
            acc += w * signal[_fold(j - 1, in_len)]
            wsum += w
        out[o] = acc / wsum
    return out


def resize(img: np.ndarray, out_h: int, out_w: int, antialias: bool) -> np.ndarray:
    """Separable reference resize of an (H, W, C) array, float64, unclamped."""
    img = img.astype(np.float64)
    h, w, c = img.shape
    tmp = np.zeros((out_h, w, c), dtype=np.float64)
    for col in range(w):
        for ch in range(c):
            tmp[:, col, ch] = _resample_1d(img[:, col, ch], out_h, antialias)
    out = np.zeros((out_h, out_w, c), dtype=np.float64)
    for row in range(out_h):
        for ch in range(c):
            out[row, :, ch] = _resample_1d(tmp[row, :, ch], out_w, antialias)
    return out


def downscale(img: np.ndarray, scale: int) -> np.ndarray:
    return resize(img, img.shape[0] // scale, img.shape[1] // scale, antialias=True)
