import numpy as np
import pytest

from srdistill.data import make_synthetic_corpus
from srdistill.model import SRModelConfig, build_model, save_checkpoint


@pytest.fixture(scope="session")
def corpus_dirs(tmp_path_factory):
    """Small synthetic train/test split; LR cache accumulates inside."""
    root = tmp_path_factory.mktemp("corpus")
    train = root / "train"
    test = root / "test"
    make_synthetic_corpus(train, count=6, size=48, seed=10)
    make_synthetic_corpus(test, count=3, size=48, seed=99)
    return train, test


@pytest.fixture(scope="session")
def teacher_ckpt(tmp_path_factory):
    """Random-weight x2 teacher checkpoint; mechanics tests only need the shape."""
    path = tmp_path_factory.mktemp("teacher") / "teacher.npz"
    model = build_model(SRModelConfig(channels=16, blocks=2, scale=2), np.random.default_rng(123))
    save_checkpoint(model, path)
    return path
