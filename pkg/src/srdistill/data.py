"""Dataset ingestion and the synthetic texture corpus.

``ingest`` walks a directory of 8-bit HR PNGs, center-crops each to
scale-divisible size, generates the bicubic LR counterpart, and caches it
under ``{hr_dir}/lr_x{scale}_{tag}/`` keyed by the HR file's content hash.
Re-running with unchanged inputs regenerates nothing.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from .imaging import (
    DEFAULT_DTYPE,
    bicubic_down,
    load_png,
    mod_crop_center,
    save_png,
)
from .upcycle import TrainingPair

log = logging.getLogger(__name__)

_CACHE_MANIFEST = "manifest.json"


@dataclass
class DatasetManifest:
    name: str
    root: Path
    scale: int
    degradation: str
    pairs: list[tuple[Path, Path]] = field(default_factory=list)  # (hr, lr)
    regenerated: int = 0

    def __len__(self) -> int:
        return len(self.pairs)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def ingest(hr_dir, scale: int, degradation: str = "bicubic",
           on_error: str = "abort") -> DatasetManifest:
    """Build (or reuse) the LR cache for a directory of HR PNGs.

    on_error: 'abort' re-raises the first per-file failure; 'continue' logs
    and skips the file.
    """
    if degradation != "bicubic":
        raise DataError(f"unknown degradation {degradation!r}; only 'bicubic' is implemented")
    root = Path(hr_dir)
    hr_files = sorted(p for p in root.glob("*.png") if p.is_file())
    if not hr_files:
        raise DataError(f"no PNG images found in {root}")

    cache_dir = root / f"lr_x{scale}_{degradation}"
    cache_dir.mkdir(exist_ok=True)
    cache_path = cache_dir / _CACHE_MANIFEST
    entries: dict[str, dict] = {}
    if cache_path.exists():
        try:
            entries = json.loads(cache_path.read_text())["entries"]
        except (json.JSONDecodeError, KeyError):
            entries = {}

    manifest = DatasetManifest(name=root.name, root=root, scale=scale, degradation=degradation)
    for hr_path in hr_files:
        try:
            digest = _sha256(hr_path)
            lr_path = cache_dir / hr_path.name
            cached = entries.get(hr_path.name)
            if cached is None or cached["hr_sha256"] != digest or not lr_path.exists():
                hr = mod_crop_center(load_png(hr_path, np.float64), scale)
                save_png(bicubic_down(hr, scale), lr_path)
                entries[hr_path.name] = {"hr_sha256": digest, "lr_name": lr_path.name}
                manifest.regenerated += 1
        except DataError:
            raise
        except Exception as exc:
            if on_error == "abort":
                raise DataError(f"failed to ingest {hr_path}: {exc}") from exc
            log.warning("skipping %s: %s", hr_path, exc)
            continue
        manifest.pairs.append((hr_path, lr_path))

    cache_path.write_text(json.dumps({"entries": entries}, indent=2, sort_keys=True))
    if not manifest.pairs:
        raise DataError(f"no usable images in {root}")
    return manifest


def load_pair(manifest: DatasetManifest, index: int, dtype=DEFAULT_DTYPE) -> TrainingPair:
    hr_path, lr_path = manifest.pairs[index]
    hr = mod_crop_center(load_png(hr_path, dtype), manifest.scale)
    lr = load_png(lr_path, dtype)
    return TrainingPair(lr=lr, hr=hr, scale=manifest.scale)


def load_all_pairs(manifest: DatasetManifest, dtype=DEFAULT_DTYPE) -> list[TrainingPair]:
    return [load_pair(manifest, i, dtype) for i in range(len(manifest))]


def eval_pairs(manifest: DatasetManifest, dtype=DEFAULT_DTYPE):
    """(lr, hr) HWC arrays as the metrics module expects them."""
    for pair in load_all_pairs(manifest, dtype):
        yield pair.lr, pair.hr


# ---------------------------------------------------------------------------
# Synthetic corpus: procedural textures so every experiment runs offline.

def _random_colors(rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    c0 = rng.uniform(0.0, 0.45, size=3)
    c1 = rng.uniform(0.55, 1.0, size=3)
    return c0, c1


def _gradient(size: int, rng: np.random.Generator) -> np.ndarray:
    theta = rng.uniform(0, 2 * np.pi)
    yy, xx = np.mgrid[0:size, 0:size] / (size - 1)
    t = xx * np.cos(theta) + yy * np.sin(theta)
    t = (t - t.min()) / (t.max() - t.min() + 1e-12)
    c0, c1 = _random_colors(rng)
    return c0 + t[:, :, None] * (c1 - c0)


def _checkerboard(size: int, rng: np.random.Generator) -> np.ndarray:
    period = int(rng.integers(4, 17))
    py, px = rng.integers(0, period, size=2)
    yy, xx = np.mgrid[0:size, 0:size]
    mask = (((yy + py) // period + (xx + px) // period) % 2).astype(np.float64)
    c0, c1 = _random_colors(rng)
    return c0 + mask[:, :, None] * (c1 - c0)


def _gabor(size: int, rng: np.random.Generator) -> np.ndarray:
    theta = rng.uniform(0, np.pi)
    freq = rng.uniform(2.0, 8.0) / size
    phase = rng.uniform(0, 2 * np.pi)
    cy, cx = rng.uniform(0.25 * size, 0.75 * size, size=2)
    sigma = rng.uniform(0.2, 0.45) * size
    yy, xx = np.mgrid[0:size, 0:size]
    carrier = np.sin(2 * np.pi * freq * (xx * np.cos(theta) + yy * np.sin(theta)) + phase)
    envelope = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * sigma**2))
    t = 0.5 + 0.5 * carrier * envelope
    c0, c1 = _random_colors(rng)
    return c0 + t[:, :, None] * (c1 - c0)


def _mixed(size: int, rng: np.random.Generator) -> np.ndarray:
    base = _gradient(size, rng)
    detail = _checkerboard(size, rng)
    w = rng.uniform(0.25, 0.5)
    return np.clip((1 - w) * base + w * detail, 0.0, 1.0)


_TEXTURES = (_gradient, _checkerboard, _gabor, _mixed)


def make_synthetic_corpus(out_dir, count: int = 16, size: int = 64, seed: int = 0) -> list[Path]:
    """Write `count` procedural RGB textures as 8-bit PNGs; fully seed-determined."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    paths = []
    for i in range(count):
        img = _TEXTURES[i % len(_TEXTURES)](size, rng)
        path = out / f"tex_{i:03d}.png"
        save_png(np.clip(img, 0.0, 1.0), path)
        paths.append(path)
    return paths
