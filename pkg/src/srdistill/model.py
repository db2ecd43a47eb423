"""EDSR-style residual CNN for super-resolution, with explicit backprop.

Architecture: head conv (3 -> C), `blocks` residual blocks (conv-ReLU-conv,
no normalization, block output scaled by residual_scaling and added to the
block input), tail conv, pixel-shuffle upsampler to the target scale, and an
output conv back to 3 channels.  3x3 kernels and zero padding throughout.
Outputs are NOT clamped; clamping belongs to evaluation/export.

Parameters live in a flat name -> float array dict, so the Adam step, the
checkpoint container, and the finite-difference tests all see one interface.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, asdict

import numpy as np

from . import layers
from .errors import CheckpointError, ConfigError, ShapeError

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class SRModelConfig:
    channels: int
    blocks: int
    scale: int
    residual_scaling: float = 1.0

    def __post_init__(self):
        if self.channels < 1 or self.blocks < 1:
            raise ConfigError(f"channels/blocks must be >= 1, got {self.channels}/{self.blocks}")
        if self.scale not in (2, 3, 4):
            raise ConfigError(f"scale must be in {{2, 3, 4}}, got {self.scale}")


# Teacher/student widths follow the published EDSR sizing; the toy pair is
# small enough for CPU-scale runs and test suites.
PRESETS = {
    "edsr-teacher": dict(channels=256, blocks=32, residual_scaling=0.1),
    "edsr-student": dict(channels=64, blocks=32, residual_scaling=1.0),
    "toy-teacher": dict(channels=32, blocks=8, residual_scaling=1.0),
    "toy-student": dict(channels=8, blocks=2, residual_scaling=1.0),
}


def preset_config(name: str, scale: int) -> SRModelConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
    return SRModelConfig(scale=scale, **PRESETS[name])


def _upsample_factors(scale: int) -> tuple[int, ...]:
    # x4 is realized as two x2 stages (EDSR convention); x2/x3 are single-stage.
    return (2, 2) if scale == 4 else (scale,)


def parameter_count(config: SRModelConfig) -> int:
    """Closed-form parameter count; checked against built models in tests."""
    c = config.channels
    n = 9 * 3 * c + c  # head
    n += config.blocks * 2 * (9 * c * c + c)  # residual blocks
    n += 9 * c * c + c  # tail
    for r in _upsample_factors(config.scale):
        n += 9 * c * (c * r * r) + c * r * r  # upsample stage conv
    n += 9 * c * 3 + 3  # output conv
    return n


def _he_normal(rng: np.random.Generator, cout: int, cin: int, dtype) -> np.ndarray:
    # Fan-in-scaled normal init: std = sqrt(2 / (9 * cin)) for 3x3 kernels.
    std = np.sqrt(2.0 / (9 * cin))
    return (rng.standard_normal((cout, cin, 3, 3)) * std).astype(dtype)


class SRModel:
    """A built network: config plus named parameter arrays."""

    def __init__(self, config: SRModelConfig, params: dict[str, np.ndarray]):
        self.config = config
        self.params = params

    @property
    def dtype(self):
        return self.params["head.w"].dtype

    def parameter_names(self) -> list[str]:
        return list(self.params)

    def forward(self, x: np.ndarray, train: bool = False):
        """Super-resolve an NCHW batch; with train=True also returns the backward cache.

        The public layout is (B, 3, H, W); internally the body runs NHWC.
        """
        if x.ndim != 4 or x.shape[1] != 3:
            raise ShapeError(f"expected (B, 3, H, W) input, got {x.shape}")
        p = self.params
        rs = self.dtype.type(self.config.residual_scaling)
        x = np.ascontiguousarray(x.transpose(0, 2, 3, 1), dtype=self.dtype)
        cache = []

        h, ctx = layers.conv2d(x, p["head.w"], p["head.b"])
        cache.append(("head", ctx))
        for i in range(self.config.blocks):
            t, c0 = layers.conv2d(h, p[f"block{i}.conv0.w"], p[f"block{i}.conv0.b"])
            t, cm = layers.relu(t)
            t, c1 = layers.conv2d(t, p[f"block{i}.conv1.w"], p[f"block{i}.conv1.b"])
            cache.append((f"block{i}", (c0, cm, c1)))
            h = h + rs * t
        t, ctx = layers.conv2d(h, p["tail.w"], p["tail.b"])
        cache.append(("tail", ctx))
        for j, r in enumerate(_upsample_factors(self.config.scale)):
            t, cc = layers.conv2d(t, p[f"upsample{j}.w"], p[f"upsample{j}.b"])
            t, cs = layers.pixel_shuffle(t, r)
            cache.append((f"upsample{j}", (cc, cs)))
        y, ctx = layers.conv2d(t, p["out.w"], p["out.b"])
        cache.append(("out", ctx))
        y = np.ascontiguousarray(y.transpose(0, 3, 1, 2))
        return (y, cache) if train else y

    def backward(self, cache, dy: np.ndarray) -> dict[str, np.ndarray]:
        """Parameter gradients for a forward pass recorded with train=True.

        dy uses the public NCHW layout of the forward output.
        """
        grads: dict[str, np.ndarray] = {}
        rs = self.dtype.type(self.config.residual_scaling)
        dy = np.ascontiguousarray(dy.transpose(0, 2, 3, 1), dtype=self.dtype)
        it = list(reversed(cache))
        pos = 0

        name, ctx = it[pos]
        assert name == "out"
        dy, grads["out.w"], grads["out.b"] = layers.conv2d_backward(ctx, dy)
        pos += 1
        for j in reversed(range(len(_upsample_factors(self.config.scale)))):
            name, (cc, cs) = it[pos]
            assert name == f"upsample{j}"
            dy = layers.pixel_shuffle_backward(cs, dy)
            dy, grads[f"upsample{j}.w"], grads[f"upsample{j}.b"] = layers.conv2d_backward(cc, dy)
            pos += 1
        name, ctx = it[pos]
        assert name == "tail"
        dy, grads["tail.w"], grads["tail.b"] = layers.conv2d_backward(ctx, dy)
        pos += 1
        for i in reversed(range(self.config.blocks)):
            name, (c0, cm, c1) = it[pos]
            assert name == f"block{i}"
            dt = rs * dy
            dt, grads[f"block{i}.conv1.w"], grads[f"block{i}.conv1.b"] = layers.conv2d_backward(c1, dt)
            dt = layers.relu_backward(cm, dt)
            dt, grads[f"block{i}.conv0.w"], grads[f"block{i}.conv0.b"] = layers.conv2d_backward(c0, dt)
            dy = dy + dt
            pos += 1
        name, ctx = it[pos]
        assert name == "head"
        _, grads["head.w"], grads["head.b"] = layers.conv2d_backward(ctx, dy)
        return grads


def build_model(config: SRModelConfig, rng: np.random.Generator, dtype=np.float32) -> SRModel:
    """Initialize a model deterministically: He-normal weights, zero biases,
    parameters drawn in declaration order."""
    c = config.channels
    params: dict[str, np.ndarray] = {}

    def add_conv(name: str, cout: int, cin: int):
        params[f"{name}.w"] = _he_normal(rng, cout, cin, dtype)
        params[f"{name}.b"] = np.zeros(cout, dtype=dtype)

    add_conv("head", c, 3)
    for i in range(config.blocks):
        add_conv(f"block{i}.conv0", c, c)
        add_conv(f"block{i}.conv1", c, c)
    add_conv("tail", c, c)
    for j, r in enumerate(_upsample_factors(config.scale)):
        add_conv(f"upsample{j}", c * r * r, c)
    add_conv("out", 3, c)
    return SRModel(config, params)


def is_upsampler_param(name: str) -> bool:
    return name.startswith("upsample")


def save_checkpoint(model: SRModel, path) -> None:
    """Write a self-describing container: config header + named float32 tensors."""
    meta = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "config": asdict(model.config),
    }
    arrays = {k: v.astype(np.float32) for k, v in model.params.items()}
    np.savez(path, __meta__=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8), **arrays)


def _read_container(path):
    try:
        data = np.load(path, allow_pickle=False)
        meta = json.loads(bytes(data["__meta__"]).decode())
    except Exception as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if meta.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint format {meta.get('format_version')!r} in {path}"
        )
    return meta, data


def load_checkpoint(path, dtype=np.float32) -> SRModel:
    """Restore a model exactly as saved (parameters bit-equal in float32)."""
    meta, data = _read_container(path)
    config = SRModelConfig(**meta["config"])
    params = {k: data[k].astype(dtype) for k in data.files if k != "__meta__"}
    expected = set(build_model(config, np.random.default_rng(0), dtype).params)
    if set(params) != expected:
        raise CheckpointError(f"checkpoint {path} does not match its own config header")
    return SRModel(config, params)


def load_adapted(path, config: SRModelConfig, rng: np.random.Generator, dtype=np.float32):
    """Load a checkpoint into a (possibly different-scale) target config.

    Body parameters are copied and must match shapes exactly.  On a scale
    mismatch the whole upsampler is freshly initialized (the x2 -> x4
    warm-start rule), even where stage shapes happen to coincide.  Returns
    (model, reinitialized_names).
    """
    meta, data = _read_container(path)
    model = build_model(config, rng, dtype)
    ckpt_scale = meta["config"].get("scale")
    reinit: list[str] = []
    stored = {k for k in data.files if k != "__meta__"}
    for name, arr in model.params.items():
        if is_upsampler_param(name) and (
            ckpt_scale != config.scale or name not in stored or data[name].shape != arr.shape
        ):
            reinit.append(name)
        elif name in stored and data[name].shape == arr.shape:
            model.params[name] = data[name].astype(dtype)
        else:
            have = data[name].shape if name in stored else None
            raise CheckpointError(
                f"body parameter {name!r} missing or shape-incompatible "
                f"(checkpoint {have}, model {arr.shape})"
            )
    if reinit:
        log.warning(
            "checkpoint %s (scale %s): re-initialized upsampler params %s for scale %s",
            path, meta["config"].get("scale"), reinit, config.scale,
        )
    return model, reinit
