import numpy as np
import pytest

from srdistill import layers
from srdistill.errors import ShapeError


def _fd_check(forward_scalar, param, analytic, rng, samples=12, eps=1e-6):
    """Central finite differences on randomly sampled coordinates of `param`."""
    flat = param.ravel()
    idxs = rng.choice(flat.size, size=min(samples, flat.size), replace=False)
    worst = 0.0
    for i in idxs:
        orig = flat[i]
        flat[i] = orig + eps
        lp = forward_scalar()
        flat[i] = orig - eps
        lm = forward_scalar()
        flat[i] = orig
        num = (lp - lm) / (2 * eps)
        ana = analytic.ravel()[i]
        worst = max(worst, abs(num - ana) / max(abs(num), abs(ana), 1e-12))
    return worst


def test_conv_shapes_and_channel_check():
    rng = np.random.default_rng(0)
    x = rng.random((2, 5, 7, 3))
    w = rng.random((4, 3, 3, 3))
    b = rng.random(4)
    y, _ = layers.conv2d(x, w, b)
    assert y.shape == (2, 5, 7, 4)
    with pytest.raises(ShapeError):
        layers.conv2d(x, rng.random((4, 5, 3, 3)), rng.random(4))


def test_conv_matches_direct_computation():
    rng = np.random.default_rng(1)
    x = rng.random((1, 4, 4, 2))
    w = rng.random((3, 2, 3, 3))
    b = rng.random(3)
    y, _ = layers.conv2d(x, w, b)
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    for co in range(3):
        for i in range(4):
            for j in range(4):
                window = xp[0, i : i + 3, j : j + 3, :]  # (3, 3, Cin)
                want = b[co] + np.sum(window * w[co].transpose(1, 2, 0))
                assert abs(y[0, i, j, co] - want) < 1e-12


def test_conv_gradients_finite_difference():
    rng = np.random.default_rng(2)
    x = rng.random((2, 5, 5, 2))
    w = rng.random((3, 2, 3, 3)) * 0.3
    b = rng.random(3) * 0.1
    target = rng.random((2, 5, 5, 3))

    def loss():
        y, _ = layers.conv2d(x, w, b)
        return float(np.mean((y - target) ** 2))

    y, ctx = layers.conv2d(x, w, b)
    dy = 2.0 * (y - target) / y.size
    dx, dw, db = layers.conv2d_backward(ctx, dy)
    assert _fd_check(loss, w, dw, rng) < 1e-6
    assert _fd_check(loss, b, db, rng) < 1e-6
    assert _fd_check(loss, x, dx, rng) < 1e-6


def test_relu_masks_negatives():
    x = np.array([[-1.0, 0.0], [2.0, -3.0]])
    y, mask = layers.relu(x)
    assert np.array_equal(y, [[0.0, 0.0], [2.0, 0.0]])
    dy = np.ones_like(x)
    assert np.array_equal(layers.relu_backward(mask, dy), [[0.0, 0.0], [1.0, 0.0]])


def test_pixel_shuffle_round_trip():
    rng = np.random.default_rng(3)
    x = rng.random((2, 3, 5, 8))
    y, ctx = layers.pixel_shuffle(x, 2)
    assert y.shape == (2, 6, 10, 2)
    back = layers.pixel_shuffle_backward(ctx, y)
    assert np.array_equal(back, x)


def test_pixel_shuffle_layout():
    # one output channel, r=2: sub-pixels come from channels [0, 1; 2, 3]
    x = np.zeros((1, 1, 1, 4))
    x[0, 0, 0, :] = [1.0, 2.0, 3.0, 4.0]
    y, _ = layers.pixel_shuffle(x, 2)
    assert np.array_equal(y[0, :, :, 0], [[1.0, 2.0], [3.0, 4.0]])


def test_pixel_shuffle_requires_divisible_channels():
    with pytest.raises(ShapeError):
        layers.pixel_shuffle(np.zeros((1, 2, 2, 6)), 2)
