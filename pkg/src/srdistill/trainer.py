"""Distillation training loop: batch assembly, upcycled inputs, loss gradients,
Adam updates, JSONL logging, checkpointing, and bit-exact resume.

Randomness is split into named streams (init / data / upcycle) derived from
the master seed, so ablation flags never shift the draws of unrelated
machinery: a distillation run with every flag off consumes exactly the same
random numbers as the plain scratch path.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import augment
from .augment import Augmentation
from .data import DatasetManifest, eval_pairs, ingest, load_all_pairs
from .errors import CheckpointError, ConfigError
from .imaging import random_crop
from .losses import LossReport, LossWeights, l1, l1_grad, total_loss, zoom_out_rec_loss
from .losses import consistency_grad_to_student_out, consistency_loss
from .metrics import MetricRecord, MetricReport, evaluate_pairs
from .model import SRModel, build_model, load_checkpoint, save_checkpoint
from .optim import AdamState, OptimizerConfig, adam_step, lr_at
from .upcycle import TrainingPair, zoom_in, zoom_out

log = logging.getLogger(__name__)

STATE_FORMAT_VERSION = 1

# Joint LR/HR patch augmentation (the standard flip/rotate recipe), applied
# before batching and unrelated to the consistency augmentation machinery.
_PAIR_AUGS = (Augmentation.HFLIP, Augmentation.VFLIP, Augmentation.ROT90)


@dataclass(frozen=True)
class TrainFlags:
    kd: bool = False
    zoom_in: bool = False
    zoom_out: bool = False
    consistency: bool = False

    def needs_teacher(self) -> bool:
        return self.kd or self.zoom_in or self.zoom_out or self.consistency

    def needs_zi(self) -> bool:
        return self.zoom_in or self.consistency


@dataclass
class LossInputs:
    """Fixed tensors for one step: everything random is already drawn."""

    lr: np.ndarray  # (B, 3, h, w)
    hr: np.ndarray  # (B, 3, s*h, s*w)
    zi: np.ndarray | None = None
    zo: np.ndarray | None = None
    aug: Augmentation | None = None


def params_digest(params: dict[str, np.ndarray]) -> str:
    """Order-independent content hash of a parameter dict."""
    h = hashlib.sha256()
    for name in sorted(params):
        h.update(name.encode())
        h.update(params[name].tobytes())
    return h.hexdigest()


def _stack_nchw(images: list[np.ndarray], dtype) -> np.ndarray:
    return np.stack([im.transpose(2, 0, 1) for im in images]).astype(dtype)


def sample_patch_pairs(
    pairs: list[TrainingPair], patch: int, batch_size: int, rng: np.random.Generator
) -> list[TrainingPair]:
    """Draw patch-level training pairs: image sampled with replacement, LR crop
    at a uniform offset, aligned HR crop, identical flip/rotation on both."""
    out = []
    n = len(pairs)
    for _ in range(batch_size):
        src = pairs[int(rng.integers(0, n))]
        s = src.scale
        lr_crop, (top, left) = random_crop(src.lr, patch, patch, rng)
        hr_crop = src.hr[s * top : s * (top + patch), s * left : s * (left + patch)].copy()
        for aug in _PAIR_AUGS:
            if rng.random() < 0.5:
                lr_crop = augment.apply(aug, lr_crop)
                hr_crop = augment.apply(aug, hr_crop)
        out.append(TrainingPair(lr=lr_crop, hr=hr_crop, scale=s))
    return out


def build_loss_inputs(
    patch_pairs: list[TrainingPair],
    flags: TrainFlags,
    upcycle_rng: np.random.Generator,
    aug_pool,
    dtype,
) -> LossInputs:
    """Assemble the step's tensors; upcycle randomness stays in its own stream."""
    lr_b = _stack_nchw([p.lr for p in patch_pairs], dtype)
    hr_b = _stack_nchw([p.hr for p in patch_pairs], dtype)
    zi_b = zo_b = aug = None
    if flags.needs_zi():
        zi_b = _stack_nchw([zoom_in(p, upcycle_rng) for p in patch_pairs], dtype)
    if flags.zoom_out:
        zo_b = _stack_nchw([zoom_out(p) for p in patch_pairs], dtype)
    if flags.consistency:
        aug = augment.sample(upcycle_rng, aug_pool)
    return LossInputs(lr=lr_b, hr=hr_b, zi=zi_b, zo=zo_b, aug=aug)


def compute_teacher_outputs(teacher: SRModel | None, inputs: LossInputs, flags: TrainFlags) -> dict:
    """Frozen-teacher forwards for every term the flags enable (no caches kept)."""
    outs: dict[str, np.ndarray] = {}
    if teacher is None:
        return outs
    if flags.kd:
        outs["lr"] = teacher.forward(inputs.lr)
    if flags.needs_zi():
        outs["zi"] = teacher.forward(inputs.zi)
    if flags.zoom_out:
        outs["zo"] = teacher.forward(inputs.zo)
    return outs


def evaluate_losses(
    student: SRModel,
    teacher_outs: dict,
    inputs: LossInputs,
    weights: LossWeights,
    flags: TrainFlags,
) -> LossReport:
    """Value-only loss evaluation (the finite-difference oracle re-runs this)."""
    s_lr = student.forward(inputs.lr)
    rec = l1(s_lr, inputs.hr)
    kd = l1(s_lr, teacher_outs["lr"]) if flags.kd else 0.0
    dukd = 0.0
    if flags.zoom_in:
        dukd += l1(student.forward(inputs.zi), teacher_outs["zi"])
    if flags.zoom_out:
        s_zo = student.forward(inputs.zo)
        dukd += l1(s_zo, teacher_outs["zo"])
        rec += zoom_out_rec_loss(s_zo, inputs.lr)
    lc = (
        consistency_loss(student, teacher_outs["zi"], inputs.zi, inputs.aug)
        if flags.consistency
        else 0.0
    )
    return total_loss(rec, kd, dukd, lc, weights)


def loss_gradients(
    student: SRModel,
    teacher_outs: dict,
    inputs: LossInputs,
    weights: LossWeights,
    flags: TrainFlags,
):
    """LossReport plus d(total)/d(student params); teacher outputs are constants."""
    s_lr, cache = student.forward(inputs.lr, train=True)
    rec = l1(s_lr, inputs.hr)
    g_out = l1_grad(s_lr, inputs.hr)
    kd = 0.0
    if flags.kd:
        kd = l1(s_lr, teacher_outs["lr"])
        g_out = g_out + weights.lambda_kd * l1_grad(s_lr, teacher_outs["lr"])
    grads = student.backward(cache, g_out)

    def accumulate(extra: dict[str, np.ndarray]):
        for k, v in extra.items():
            grads[k] += v

    dukd = 0.0
    if flags.zoom_in:
        s_zi, cache = student.forward(inputs.zi, train=True)
        dukd += l1(s_zi, teacher_outs["zi"])
        accumulate(student.backward(cache, weights.lambda_dukd * l1_grad(s_zi, teacher_outs["zi"])))
    if flags.zoom_out:
        s_zo, cache = student.forward(inputs.zo, train=True)
        dukd += l1(s_zo, teacher_outs["zo"])
        rec_zo = zoom_out_rec_loss(s_zo, inputs.lr)
        rec += rec_zo
        g_zo = weights.lambda_dukd * l1_grad(s_zo, teacher_outs["zo"]) + l1_grad(s_zo, inputs.lr)
        accumulate(student.backward(cache, g_zo))
    lc = 0.0
    if flags.consistency:
        perturbed = augment.apply(inputs.aug, inputs.zi, hw_axes=(2, 3))
        s_aug, cache = student.forward(perturbed, train=True)
        restored = augment.invert(inputs.aug, s_aug, hw_axes=(2, 3))
        lc = l1(restored, teacher_outs["zi"])
        g_restored = weights.lambda_lc * l1_grad(restored, teacher_outs["zi"])
        accumulate(student.backward(cache, consistency_grad_to_student_out(inputs.aug, g_restored)))

    return total_loss(rec, kd, dukd, lc, weights), grads


def distill_step(
    student: SRModel,
    teacher: SRModel | None,
    inputs: LossInputs,
    weights: LossWeights,
    flags: TrainFlags,
    adam: AdamState,
    lr_value: float,
    ocfg: OptimizerConfig,
) -> LossReport:
    """One full training step on pre-assembled inputs."""
    teacher_outs = compute_teacher_outputs(teacher, inputs, flags)
    report, grads = loss_gradients(student, teacher_outs, inputs, weights, flags)
    adam_step(student.params, grads, adam, lr_value, ocfg)
    return report


def scratch_step(
    student: SRModel,
    inputs: LossInputs,
    adam: AdamState,
    lr_value: float,
    ocfg: OptimizerConfig,
) -> LossReport:
    """Reconstruction-only baseline step; contains no distillation machinery."""
    out, cache = student.forward(inputs.lr, train=True)
    rec = l1(out, inputs.hr)
    grads = student.backward(cache, l1_grad(out, inputs.hr))
    adam_step(student.params, grads, adam, lr_value, ocfg)
    return LossReport(rec=rec, kd=0.0, dukd=0.0, lc=0.0, total=rec)


# ---------------------------------------------------------------------------
# Experiment runner


@dataclass
class ExperimentConfig:
    train_dir: str
    scale: int
    student: dict  # SRModelConfig kwargs minus scale, or {"preset": name}
    out_dir: str
    seed: int = 0
    mode: str = "scratch"  # "scratch" | "distill"
    test_dirs: list[str] = field(default_factory=list)
    degradation: str = "bicubic"
    teacher_checkpoint: str | None = None
    student_init: str | None = None  # warm start, e.g. the x2 checkpoint for a x4 run
    weights: LossWeights = field(default_factory=LossWeights)
    flags: TrainFlags = field(default_factory=TrainFlags)
    aug_pool: tuple = augment.NON_IDENTITY
    optim: OptimizerConfig = field(default_factory=OptimizerConfig)
    eval_every: int = 5000
    ckpt_every: int = 0  # 0: only the final checkpoint
    log_every: int = 1

    def __post_init__(self):
        if self.mode not in ("scratch", "distill"):
            raise ConfigError(f"mode must be 'scratch' or 'distill', got {self.mode!r}")
        if self.mode == "distill" and not self.teacher_checkpoint:
            raise ConfigError("distill mode requires a teacher checkpoint")


@dataclass
class RunResult:
    checkpoint: Path
    state_path: Path
    log_path: Path
    report: MetricReport
    iterations: int


def _student_config(cfg: ExperimentConfig):
    from .model import SRModelConfig, preset_config

    if "preset" in cfg.student:
        return preset_config(cfg.student["preset"], cfg.scale)
    return SRModelConfig(scale=cfg.scale, **cfg.student)


def _rng_state(rng: np.random.Generator) -> dict:
    return rng.bit_generator.state


def _restore_rng(state: dict) -> np.random.Generator:
    gen = np.random.Generator(np.random.PCG64())
    gen.bit_generator.state = state
    return gen


def save_train_state(path, iteration: int, student: SRModel, adam: AdamState,
                     rngs: dict[str, np.random.Generator]) -> None:
    meta = {
        "format_version": STATE_FORMAT_VERSION,
        "iteration": iteration,
        "adam_t": adam.t,
        "rng": {k: _rng_state(v) for k, v in rngs.items()},
        "model_config": {
            "channels": student.config.channels,
            "blocks": student.config.blocks,
            "scale": student.config.scale,
            "residual_scaling": student.config.residual_scaling,
        },
    }
    arrays = {}
    for k, v in student.params.items():
        arrays[f"param/{k}"] = v
        arrays[f"m/{k}"] = adam.m[k]
        arrays[f"v/{k}"] = adam.v[k]
    np.savez(path, __meta__=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8), **arrays)


def load_train_state(path, student: SRModel, adam: AdamState) -> tuple[int, dict]:
    """Restore parameters, Adam accumulators, and RNG streams in place.

    Returns (iteration, rng generators by stream name)."""
    try:
        data = np.load(path, allow_pickle=False)
        meta = json.loads(bytes(data["__meta__"]).decode())
    except Exception as exc:
        raise CheckpointError(f"cannot read train state {path}: {exc}") from exc
    if meta.get("format_version") != STATE_FORMAT_VERSION:
        raise CheckpointError(f"unsupported train-state version in {path}")
    for k in student.params:
        student.params[k] = data[f"param/{k}"]
        adam.m[k] = data[f"m/{k}"]
        adam.v[k] = data[f"v/{k}"]
    adam.t = meta["adam_t"]
    rngs = {k: _restore_rng(s) for k, s in meta["rng"].items()}
    return meta["iteration"], rngs


def run(cfg: ExperimentConfig, resume_from=None, stop_after: int | None = None) -> RunResult:
    """Execute an experiment to completion (or `stop_after` iterations).

    Artifacts in cfg.out_dir: log.jsonl (iter, lr, loss components),
    eval.jsonl, run_meta.json, state_latest.npz, student_final.npz, and
    metrics.json for the final evaluation.
    """
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ocfg = cfg.optim

    train_manifest = ingest(cfg.train_dir, cfg.scale, cfg.degradation)
    test_manifests = [ingest(d, cfg.scale, cfg.degradation) for d in cfg.test_dirs]
    train_pairs = load_all_pairs(train_manifest)

    teacher = None
    if cfg.mode == "distill":
        teacher = load_checkpoint(cfg.teacher_checkpoint)
        if teacher.config.scale != cfg.scale:
            raise ConfigError(
                f"teacher scale {teacher.config.scale} != experiment scale {cfg.scale}"
            )
    teacher_hash = params_digest(teacher.params) if teacher else None

    seeds = np.random.SeedSequence(cfg.seed).spawn(3)
    init_rng = np.random.default_rng(seeds[0])
    rngs = {
        "data": np.random.default_rng(seeds[1]),
        "upcycle": np.random.default_rng(seeds[2]),
    }
    student_cfg = _student_config(cfg)
    if cfg.student_init:
        from .model import load_adapted

        student, reinit = load_adapted(cfg.student_init, student_cfg, init_rng)
        if reinit:
            log.info("warm start from %s; re-initialized %s", cfg.student_init, reinit)
    else:
        student = build_model(student_cfg, init_rng)
    adam = AdamState(student.params)

    start_iter = 0
    if resume_from is not None:
        start_iter, rngs = load_train_state(resume_from, student, adam)

    from dataclasses import asdict

    (out_dir / "run_meta.json").write_text(json.dumps({
        "seed": cfg.seed, "mode": cfg.mode, "scale": cfg.scale, "workers": 1,
        "flags": asdict(cfg.flags), "weights": asdict(cfg.weights),
        "train_dir": str(cfg.train_dir), "start_iter": start_iter,
    }, default=str, indent=2))

    log_path = out_dir / "log.jsonl"
    eval_path = out_dir / "eval.jsonl"
    log_mode = "a" if start_iter > 0 else "w"
    if log_mode == "w" and eval_path.exists():
        eval_path.unlink()
    end_iter = ocfg.total_iters if stop_after is None else min(stop_after, ocfg.total_iters)

    def run_eval(iteration: int) -> MetricReport:
        report = MetricReport()
        for m in test_manifests:
            rec = evaluate_pairs(
                student, eval_pairs(m), dataset=m.name, scale=cfg.scale,
                method=cfg.mode, shave=cfg.scale,
            )
            report.records.append(rec)
        with open(eval_path, "a") as fh:
            for rec in report.records:
                fh.write(json.dumps({"iter": iteration, **rec.to_dict()}) + "\n")
        return report

    with open(log_path, log_mode) as log_fh:
        for it in range(start_iter, end_iter):
            lr_value = lr_at(it, ocfg)
            patch_pairs = sample_patch_pairs(train_pairs, ocfg.lr_patch, ocfg.batch_size, rngs["data"])
            if cfg.mode == "scratch":
                inputs = build_loss_inputs(patch_pairs, TrainFlags(), rngs["upcycle"], cfg.aug_pool, np.float32)
                report = scratch_step(student, inputs, adam, lr_value, ocfg)
            else:
                inputs = build_loss_inputs(patch_pairs, cfg.flags, rngs["upcycle"], cfg.aug_pool, np.float32)
                report = distill_step(student, teacher, inputs, cfg.weights, cfg.flags, adam, lr_value, ocfg)
            step = it + 1
            if cfg.log_every and step % cfg.log_every == 0:
                log_fh.write(json.dumps({"iter": step, "lr": lr_value, **report.to_dict()}) + "\n")
            if cfg.eval_every and test_manifests and step % cfg.eval_every == 0 and step != end_iter:
                run_eval(step)
            if cfg.ckpt_every and step % cfg.ckpt_every == 0:
                save_train_state(out_dir / "state_latest.npz", step, student, adam, rngs)

    if teacher is not None and params_digest(teacher.params) != teacher_hash:
        raise RuntimeError("teacher parameters changed during training")

    state_path = out_dir / "state_latest.npz"
    save_train_state(state_path, end_iter, student, adam, rngs)
    ckpt_path = out_dir / "student_final.npz"
    save_checkpoint(student, ckpt_path)
    final_report = run_eval(end_iter) if test_manifests else MetricReport()
    (out_dir / "metrics.json").write_text(final_report.to_json())
    return RunResult(
        checkpoint=ckpt_path, state_path=state_path, log_path=log_path,
        report=final_report, iterations=end_iter,
    )
