import numpy as np
import pytest

from flat_loss_oracle import mean_abs, weighted_total
from srdistill.augment import Augmentation
from srdistill.errors import ConfigError, ShapeError
from srdistill.losses import (
    LossWeights,
    consistency_loss,
    dukd_loss,
    l1,
    l1_grad,
    total_loss,
    zoom_out_rec_loss,
)
from srdistill.model import SRModelConfig, build_model


def test_l1_zero_for_equal():
    a = np.random.default_rng(0).random((2, 3, 4, 4))
    assert l1(a, a.copy()) == 0.0


def test_l1_constant_offset():
    a = np.zeros((3, 5))
    b = np.full((3, 5), 0.5)
    assert l1(a, b) == pytest.approx(0.5)


def test_l1_hand_case():
    a = np.array([0.0, 0.2])
    b = np.array([0.1, 0.5])
    assert l1(a, b) == pytest.approx(0.2)


def test_l1_shape_mismatch():
    with pytest.raises(ShapeError):
        l1(np.zeros((2, 2)), np.zeros((2, 3)))


def test_l1_symmetric_nonneg_triangle():
    rng = np.random.default_rng(1)
    a, b, c = rng.random((3, 4, 4))
    assert l1(a, b) == pytest.approx(l1(b, a))
    assert l1(a, b) >= 0.0
    assert l1(a, c) <= l1(a, b) + l1(b, c) + 1e-12


def test_l1_matches_flat_loop():
    rng = np.random.default_rng(2)
    a = rng.random((2, 3, 5, 5))
    b = rng.random((2, 3, 5, 5))
    assert l1(a, b) == pytest.approx(mean_abs(a, b), rel=1e-12)


def test_l1_grad_sign_over_size():
    a = np.array([1.0, 0.0, 0.5])
    b = np.array([0.0, 1.0, 0.5])
    assert np.array_equal(l1_grad(a, b), np.array([1.0, -1.0, 0.0]) / 3.0)


def test_dukd_zero_when_student_equals_teacher():
    x = np.random.default_rng(3).random((2, 3, 4, 4))
    assert dukd_loss(x, x.copy(), x, x.copy()) == 0.0


def test_dukd_single_term_when_zoom_out_absent():
    a = np.zeros((2, 2))
    b = np.full((2, 2), 0.2)
    assert dukd_loss(a, b) == pytest.approx(0.2)


def test_dukd_sums_terms():
    a = np.zeros((2, 2))
    assert dukd_loss(a, np.full((2, 2), 0.2), a, np.full((2, 2), 0.1)) == pytest.approx(0.3)


def test_dukd_contract_error_on_lone_zo():
    a = np.zeros((2, 2))
    with pytest.raises(ShapeError):
        dukd_loss(a, a, student_out_zo=a)


def test_zoom_out_rec():
    a = np.zeros((4, 4))
    assert zoom_out_rec_loss(a, a.copy()) == 0.0
    assert zoom_out_rec_loss(a, np.full((4, 4), 0.25)) == pytest.approx(0.25)
    rng = np.random.default_rng(4)
    x, y = rng.random((2, 3, 6, 6)), rng.random((2, 3, 6, 6))
    assert zoom_out_rec_loss(x, y) == pytest.approx(mean_abs(x, y), rel=1e-12)


class _IdentityNet:
    """Equivariant stand-in: output == input (geometric augs commute with it)."""

    def forward(self, x):
        return x.copy()


def test_consistency_zero_for_equivariant_function():
    rng = np.random.default_rng(5)
    x = rng.random((2, 3, 6, 6))
    net = _IdentityNet()
    teacher_out = net.forward(x)
    assert consistency_loss(net, teacher_out, x, Augmentation.HFLIP) == 0.0


def test_consistency_identity_aug_equals_plain_kd():
    rng = np.random.default_rng(6)
    model = build_model(SRModelConfig(channels=4, blocks=1, scale=2), np.random.default_rng(0))
    x = rng.random((2, 3, 6, 6)).astype(np.float32)
    teacher_out = rng.random((2, 3, 12, 12)).astype(np.float32)
    lc = consistency_loss(model, teacher_out, x, Augmentation.IDENTITY)
    assert lc == pytest.approx(l1(model.forward(x), teacher_out), rel=1e-12)


def test_consistency_color_inversion_linear_student():
    # with S(x) = x, inverting the inverted input restores x exactly on the
    # 8-bit lattice, so the loss reduces to l1(x, teacher_out)
    rng = np.random.default_rng(7)
    x = (rng.integers(0, 256, (1, 3, 4, 4)) / np.float64(255.0)).astype(np.float64)
    teacher_out = rng.random((1, 3, 4, 4))
    net = _IdentityNet()
    lc = consistency_loss(net, teacher_out, x, Augmentation.COLOR_INVERSION)
    assert lc == pytest.approx(l1(x, teacher_out), rel=1e-12)


def test_total_loss_hand_arithmetic():
    report = total_loss(0.4, 0.2, 0.3, 0.0, LossWeights(1.0, 1.0, 0.0))
    assert report.total == pytest.approx(0.9)


def test_total_all_zero():
    report = total_loss(0.0, 0.0, 0.0, 0.0, LossWeights())
    assert report.total == 0.0


def test_total_reduces_to_rec_for_zero_weights():
    report = total_loss(0.37, 0.5, 0.6, 0.7, LossWeights(0.0, 0.0, 0.0))
    assert report.total == pytest.approx(0.37)


def test_total_linear_in_each_weight():
    rec, kd, dukd, lc = 0.1, 0.2, 0.3, 0.4
    for lam in (0.0, 0.5, 1.0, 2.0):
        r = total_loss(rec, kd, dukd, lc, LossWeights(lam, 1.0, 1.0))
        assert r.total == pytest.approx(rec + lam * kd + 1.0 * dukd + 1.0 * lc)


def test_total_matches_flat_oracle():
    w = LossWeights(0.7, 1.3, 0.2)
    r = total_loss(0.11, 0.22, 0.33, 0.44, w)
    assert r.total == pytest.approx(weighted_total(0.11, 0.22, 0.33, 0.44, 0.7, 1.3, 0.2), rel=1e-12)


def test_report_invariant():
    w = LossWeights(0.5, 2.0, 1.5)
    r = total_loss(0.1, 0.2, 0.3, 0.4, w)
    assert abs(r.total - (r.rec + w.lambda_kd * r.kd + w.lambda_dukd * r.dukd + w.lambda_lc * r.lc)) <= 1e-9


def test_negative_weights_rejected():
    with pytest.raises(ConfigError):
        LossWeights(lambda_kd=-0.1)
    with pytest.raises(ConfigError):
        LossWeights(lambda_lc=float("nan"))
