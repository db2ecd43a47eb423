"""Adam optimizer and the step-decay learning-rate schedule."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GradientError, ShapeError


@dataclass(frozen=True)
class OptimizerConfig:
    """Training-recipe defaults: Adam(0.9, 0.99, 1e-8), lr 1e-4 decayed 10x
    every 1e5 of 2.5e5 updates, batch 16, 48x48 LR patches."""

    lr0: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.99
    epsilon: float = 1e-8
    decay_factor: float = 10.0
    decay_every: int = 100_000
    total_iters: int = 250_000
    batch_size: int = 16
    lr_patch: int = 48

    def __post_init__(self):
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ConfigError(f"betas must be in (0, 1), got {self.beta1}, {self.beta2}")
        if self.epsilon <= 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if self.decay_every > self.total_iters:
            raise ConfigError(
                f"decay_every ({self.decay_every}) must be <= total_iters ({self.total_iters})"
            )


def lr_at(iteration: int, cfg: OptimizerConfig) -> float:
    """Piecewise-constant schedule: lr0 / decay_factor ** floor(iter / decay_every)."""
    if iteration < 0 or iteration >= cfg.total_iters:
        raise ConfigError(f"iteration {iteration} outside [0, {cfg.total_iters})")
    return cfg.lr0 / cfg.decay_factor ** (iteration // cfg.decay_every)


class AdamState:
    """First/second moment accumulators plus the bias-correction step count."""

    def __init__(self, params: dict[str, np.ndarray]):
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    cfg: OptimizerConfig,
) -> None:
    """One bias-corrected Adam update, in place.

    Gradients are checked for finiteness before any accumulator is touched,
    so a bad step leaves parameters and moments untouched.
    """
    if set(grads) != set(params):
        raise ShapeError("gradient keys do not match parameter keys")
    for name, g in grads.items():
        if g.shape != params[name].shape:
            raise ShapeError(f"gradient shape {g.shape} != param shape {params[name].shape} for {name}")
        if not np.all(np.isfinite(g)):
            raise GradientError(f"non-finite gradient in {name!r}; step aborted")

    state.t += 1
    t = state.t
    b1, b2 = cfg.beta1, cfg.beta2
    corr1 = 1.0 - b1**t
    corr2 = 1.0 - b2**t
    for name, g in grads.items():
        m, v = state.m[name], state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        mhat = m / corr1
        vhat = v / corr2
        params[name] -= (lr * mhat / (np.sqrt(vhat) + cfg.epsilon)).astype(params[name].dtype)
