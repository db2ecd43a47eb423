import pytest
import yaml

from srdistill.augment import Augmentation
from srdistill.config import config_from_dict, load_config
from srdistill.errors import ConfigError


def minimal_dict(**overrides):
    d = {
        "data": {"train_dir": "/data/train", "scale": 2},
        "model": {"student": {"preset": "toy-student"}},
        "run": {"out_dir": "/out"},
    }
    d.update(overrides)
    return d


def test_minimal_config():
    cfg = config_from_dict(minimal_dict())
    assert cfg.scale == 2
    assert cfg.mode == "scratch"
    assert cfg.optim.lr0 == 1e-4
    assert cfg.eval_every == 5000
    assert len(cfg.aug_pool) == 6


def test_full_config_round_trip(tmp_path):
    raw = {
        "data": {"train_dir": "/d/t", "scale": 4, "test_dirs": ["/d/a", "/d/b"]},
        "model": {
            "student": {"channels": 16, "blocks": 4},
            "teacher_checkpoint": "/ckpt/teacher.npz",
            "student_init": "/ckpt/x2.npz",
        },
        "loss": {
            "kd": True, "zoom_in": True, "zoom_out": False, "consistency": True,
            "lambda_kd": 0.5, "lambda_dukd": 2.0, "lambda_lc": 0.25,
            "aug_pool": ["hflip", "color_inversion"],
        },
        "optim": {"lr0": 0.001, "total_iters": 100, "decay_every": 50, "batch_size": 4, "lr_patch": 12},
        "run": {"out_dir": "/out", "mode": "distill", "seed": 9, "eval_every": 10},
    }
    path = tmp_path / "exp.yaml"
    path.write_text(yaml.safe_dump(raw))
    cfg = load_config(path)
    assert cfg.flags.kd and cfg.flags.zoom_in and not cfg.flags.zoom_out
    assert cfg.weights.lambda_dukd == 2.0
    assert cfg.aug_pool == (Augmentation.HFLIP, Augmentation.COLOR_INVERSION)
    assert cfg.optim.total_iters == 100
    assert cfg.seed == 9
    assert cfg.student == {"channels": 16, "blocks": 4}


def test_missing_required_key():
    d = minimal_dict()
    del d["data"]["train_dir"]
    with pytest.raises(ConfigError):
        config_from_dict(d)


def test_unknown_section_rejected():
    with pytest.raises(ConfigError):
        config_from_dict(minimal_dict(extra={"x": 1}))


def test_unknown_optim_key_rejected():
    d = minimal_dict()
    d["optim"] = {"learning_rate": 0.1}
    with pytest.raises(ConfigError):
        config_from_dict(d)


def test_bad_aug_name():
    d = minimal_dict()
    d["loss"] = {"aug_pool": ["hflip", "blur"]}
    with pytest.raises(ConfigError):
        config_from_dict(d)


def test_distill_without_teacher_rejected():
    d = minimal_dict()
    d["run"]["mode"] = "distill"
    with pytest.raises(ConfigError):
        config_from_dict(d)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.yaml")


def test_invalid_yaml(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("data: [unclosed")
    with pytest.raises(ConfigError):
        load_config(p)
