"""Experiment config files: YAML with data / model / loss / optim / run sections."""

from __future__ import annotations

from pathlib import Path

import yaml

from .augment import Augmentation
from .errors import ConfigError
from .losses import LossWeights
from .optim import OptimizerConfig
from .trainer import ExperimentConfig, TrainFlags

_SECTIONS = ("data", "model", "loss", "optim", "run")


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"missing required key {key!r} in section {where!r}")
    return section[key]


def _aug_pool(names) -> tuple:
    pool = []
    for name in names:
        try:
            pool.append(Augmentation(name))
        except ValueError:
            raise ConfigError(f"unknown augmentation {name!r} in loss.aug_pool") from None
    return tuple(pool)


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    unknown = set(raw) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    data = raw.get("data", {})
    model = raw.get("model", {})
    loss = raw.get("loss", {})
    optim = raw.get("optim", {})
    run = raw.get("run", {})

    try:
        weights = LossWeights(
            lambda_kd=float(loss.get("lambda_kd", 1.0)),
            lambda_dukd=float(loss.get("lambda_dukd", 1.0)),
            lambda_lc=float(loss.get("lambda_lc", 1.0)),
        )
        flags = TrainFlags(
            kd=bool(loss.get("kd", False)),
            zoom_in=bool(loss.get("zoom_in", False)),
            zoom_out=bool(loss.get("zoom_out", False)),
            consistency=bool(loss.get("consistency", False)),
        )
        ocfg = OptimizerConfig(**{k: v for k, v in optim.items()})
        return ExperimentConfig(
            train_dir=str(_require(data, "train_dir", "data")),
            scale=int(_require(data, "scale", "data")),
            test_dirs=[str(d) for d in data.get("test_dirs", [])],
            degradation=str(data.get("degradation", "bicubic")),
            student=dict(_require(model, "student", "model")),
            teacher_checkpoint=model.get("teacher_checkpoint"),
            student_init=model.get("student_init"),
            weights=weights,
            flags=flags,
            aug_pool=_aug_pool(loss["aug_pool"]) if "aug_pool" in loss else tuple(
                a for a in Augmentation if a is not Augmentation.IDENTITY
            ),
            optim=ocfg,
            seed=int(run.get("seed", 0)),
            mode=str(run.get("mode", "scratch")),
            out_dir=str(_require(run, "out_dir", "run")),
            eval_every=int(run.get("eval_every", 5000)),
            ckpt_every=int(run.get("ckpt_every", 0)),
            log_every=int(run.get("log_every", 1)),
        )
    except TypeError as exc:
        raise ConfigError(f"bad config value: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return config_from_dict(raw or {})
