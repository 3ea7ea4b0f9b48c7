"""Bump-kernel smoothing: exactness, Lipschitz preservation, convergence."""

import numpy as np
import pytest

from lipnets import (
    BoxDomain,
    NormSpec,
    build_kernel,
    fidelity_curve,
    gradient_deviation,
    hat_net,
    mollify_batch,
    mollify_eval,
    mollify_grad_eval,
    random_lipschitz_mixture,
)


def test_kernel_is_a_convex_combination():
    for d in (1, 2):
        kernel = build_kernel(0.1, d, 9)
        assert kernel.weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert (kernel.weights > 0).all()
        # Strictly inside the ball.
        assert (np.linalg.norm(kernel.offsets, axis=1) < 0.1).all()
        # Symmetric lattice: first moment vanishes.
        assert np.allclose(kernel.offsets.T @ kernel.weights, 0.0, atol=1e-15)


def test_kernel_argument_validation():
    with pytest.raises(ValueError):
        build_kernel(0.1, 1, 8)  # even resolution
    with pytest.raises(ValueError):
        build_kernel(0.0, 1, 9)


def test_constant_and_linear_reproduced():
    kernel = build_kernel(0.2, 1, 21)
    const = mollify_eval(lambda p: np.full(len(p), 3.25), kernel, np.array([0.4]))
    assert const == pytest.approx(3.25, abs=1e-12)
    lin = mollify_eval(lambda p: p[:, 0], kernel, np.array([0.4]))
    assert lin == pytest.approx(0.4, abs=1e-12)


def test_abs_at_kink():
    kernel = build_kernel(0.1, 1, 21)
    value = mollify_eval(lambda p: np.abs(p[:, 0]), kernel, np.array([0.0]))
    assert 0.0 < value <= 0.1
    grad = mollify_grad_eval(
        lambda p: np.abs(p[:, 0]), kernel, np.array([0.0]), step=0.01
    )
    assert abs(grad[0]) <= 1e-8


def test_linear_gradient_exact():
    kernel = build_kernel(0.15, 2, 9)
    f = lambda p: 2.0 * p[:, 0] - 0.5 * p[:, 1]
    grad = mollify_grad_eval(f, kernel, np.array([0.3, -0.2]), step=0.01)
    assert np.allclose(grad, [2.0, -0.5], atol=1e-9)


def test_hat_flank_slope():
    hat = hat_net()
    kernel = build_kernel(0.2, 1, 21)
    grad = mollify_grad_eval(
        lambda p: hat(p), kernel, np.array([-1.5]), step=0.002
    )
    assert grad[0] == pytest.approx(1.0, abs=1e-8)


def test_mollified_second_differences_bounded():
    hat = hat_net()
    for radius in (0.2, 0.1, 0.05):
        kernel = build_kernel(radius, 1, 21)
        xs = np.linspace(-2.5, 0.5, 101)[:, None]
        h = radius / 20.0
        hi = mollify_batch(lambda p: hat(p), kernel, xs + h)
        lo = mollify_batch(lambda p: hat(p), kernel, xs - h)
        mid = mollify_batch(lambda p: hat(p), kernel, xs)
        second = (hi - 2.0 * mid + lo) / (h * h)
        assert np.isfinite(second).all()
        assert float(np.abs(second).max()) <= 30.0 / radius


def test_lipschitz_preserved_exactly():
    rng = np.random.default_rng(4321)
    box = BoxDomain(np.zeros(1), np.ones(1))
    norm = NormSpec(1.0, 1)
    f = random_lipschitz_mixture(rng, box.enlarge(1.0), norm, 1.0)
    kernel = build_kernel(0.1, 1, 15)
    x = box.sample(rng, 200)
    smoothed = mollify_batch(f, kernel, x)
    gap = np.abs(smoothed[:, None] - smoothed[None, :])
    dist = np.abs(x[:, None, 0] - x[None, :, 0])
    mask = dist > 1e-12
    assert float(np.max(gap[mask] / dist[mask])) <= 1.0 + 1e-9


def test_uniform_error_within_radius():
    kernel = build_kernel(0.1, 1, 21)
    xs = np.linspace(0.0, 1.0, 101)[:, None]
    f = lambda p: np.abs(p[:, 0] - 0.5)
    smoothed = mollify_batch(f, kernel, xs)
    assert float(np.abs(smoothed - f(xs)).max()) <= 0.1


def test_gradient_deviation_decreases():
    box = BoxDomain(np.zeros(1), np.ones(1))
    f = lambda p: np.sin(2.0 * p[:, 0])
    grad_f = lambda p: 2.0 * np.cos(2.0 * p[:, 0])[:, None]
    devs = [
        gradient_deviation(f, grad_f, r, box, resolution=51, quad_resolution=15)
        for r in (0.2, 0.1, 0.05)
    ]
    assert devs[0] > devs[1] > devs[2]


def test_fidelity_curve_shape():
    curve = fidelity_curve(1, radii=(0.2, 0.1), resolution=41)
    assert [r for r, _ in curve] == [0.2, 0.1]
    assert curve[0][1] > curve[1][1] > 0.0
