"""Random-feature least squares with derivative matching."""

import math

import numpy as np
import pytest

from lipnets import (
    BoxDomain,
    FitTarget,
    NormSpec,
    SampledFunction,
    fit_adaptive,
    fit_c1,
)

ABS = NormSpec(1.0, 1)
UNIT = BoxDomain(np.zeros(1), np.ones(1))


def _target_1d(f, grad, value_tol, grad_tol, resolution=101, box=UNIT, norm=ABS):
    x = box.lattice(resolution)
    return FitTarget(
        SampledFunction(box, resolution, f(x), gradients=grad(x)),
        value_tol,
        grad_tol,
        norm,
    )


def _kink(x):
    return np.maximum(0.0, x[:, 0] - 0.5)


def _kink_grad(x):
    return np.where(x[:, 0] > 0.5, 1.0, 0.0)[:, None]


def test_zero_target_trivial():
    target = _target_1d(
        lambda x: np.zeros(len(x)), lambda x: np.zeros((len(x), 1)), 1e-9, 1e-9
    )
    report = fit_c1(target, 4, "relu", seed=0)
    assert report.converged
    assert report.achieved_value_err == 0.0
    assert report.achieved_grad_err == 0.0
    assert report.net.width == 0
    assert report.net.b == 0.0


def test_exactly_representable_single_unit():
    target = _target_1d(_kink, _kink_grad, 1e-8, 1e-8)
    report = fit_c1(target, 1, "relu", seed=0)
    assert report.converged
    assert report.width_used == 1
    assert report.achieved_value_err <= 1e-8
    assert report.achieved_grad_err <= 1e-8


def test_adaptive_stops_at_first_converged_width():
    target = _target_1d(_kink, _kink_grad, 1e-8, 1e-8)
    report = fit_adaptive(target, 64, "relu", seed=0)
    assert report.converged
    assert report.width_used <= 1


def test_linear_target_tanh():
    target = _target_1d(
        lambda x: 0.5 * x[:, 0], lambda x: np.full((len(x), 1), 0.5), 0.01, 0.01
    )
    report = fit_c1(target, 8, "tanh", seed=0)
    assert report.converged


def test_smooth_target_adaptive_tanh():
    target = _target_1d(
        lambda x: np.sin(np.pi * x[:, 0]) / np.pi,
        lambda x: np.cos(np.pi * x[:, 0])[:, None],
        0.05,
        0.05,
    )
    report = fit_adaptive(target, 64, "tanh", seed=0)
    assert report.converged
    assert report.width_used <= 64
    # Independent residual oracle on a 10x finer grid.
    fine = np.linspace(0.0, 1.0, 1001)[:, None]
    values = report.net(fine)
    grads = report.net.gradient(fine)
    assert float(np.abs(values - np.sin(np.pi * fine[:, 0]) / np.pi).max()) <= 1.5 * 0.05
    assert float(np.abs(grads[:, 0] - np.cos(np.pi * fine[:, 0])).max()) <= 1.5 * 0.05


def test_convergence_soundness_on_finer_grid():
    # Whenever convergence is reported, a 4x finer lattice agrees within
    # 1.5x tolerance.
    cases = [
        ("relu", _target_1d(_kink, _kink_grad, 1e-6, 1e-6)),
        (
            "tanh",
            _target_1d(
                lambda x: np.sin(np.pi * x[:, 0]) / np.pi,
                lambda x: np.cos(np.pi * x[:, 0])[:, None],
                0.05,
                0.05,
            ),
        ),
    ]
    for activation, target in cases:
        report = fit_adaptive(target, 64, activation, seed=1)
        assert report.converged
        res = target.samples.resolution
        fine = UNIT.lattice(4 * (res - 1) + 1)
        truth_v = (
            _kink(fine)
            if activation == "relu"
            else np.sin(np.pi * fine[:, 0]) / np.pi
        )
        truth_g = (
            _kink_grad(fine)[:, 0]
            if activation == "relu"
            else np.cos(np.pi * fine[:, 0])
        )
        assert float(np.abs(report.net(fine) - truth_v).max()) <= 1.5 * target.value_tol
        assert (
            float(np.abs(report.net.gradient(fine)[:, 0] - truth_g).max())
            <= 1.5 * target.grad_tol
        )


def test_error_score_monotone_in_width_budget():
    # Doubling the width budget never worsens the worst residual relative
    # to its tolerance (candidate ladders share features).
    target = _target_1d(
        lambda x: np.abs(x[:, 0] - 0.37) + 0.5 * np.sin(3.0 * x[:, 0]),
        lambda x: (np.sign(x[:, 0] - 0.37) + 1.5 * np.cos(3.0 * x[:, 0]))[:, None],
        1e-3,
        1e-3,
    )
    for seed in (0, 1):
        scores = []
        for width in (4, 8, 16, 32, 64):
            report = fit_c1(target, width, "relu", seed=seed, refine_iters=0)
            scores.append(report.normalized_error(target))
        for small, big in zip(scores, scores[1:]):
            assert big <= small + 1e-9


def test_deterministic_reports():
    target = _target_1d(
        lambda x: np.abs(x[:, 0] - 0.5),
        lambda x: np.sign(x[:, 0] - 0.5)[:, None],
        1e-3,
        1e-3,
    )
    first = fit_c1(target, 16, "relu", seed=42)
    second = fit_c1(target, 16, "relu", seed=42)
    assert first.to_json() == second.to_json()


def test_residual_symmetry_under_negation():
    def f(x):
        return np.abs(x[:, 0] - 0.5)

    def g(x):
        return np.sign(x[:, 0] - 0.5)[:, None]

    plus = _target_1d(f, g, 1e-8, 1e-8)
    minus = _target_1d(lambda x: -f(x), lambda x: -g(x), 1e-8, 1e-8)
    for seed in (0, 3):
        rp = fit_c1(plus, 16, "relu", seed=seed)
        rm = fit_c1(minus, 16, "relu", seed=seed)
        assert rp.achieved_value_err == pytest.approx(rm.achieved_value_err, abs=1e-9)
        assert rp.achieved_grad_err == pytest.approx(rm.achieved_grad_err, abs=1e-9)


def test_two_dimensional_fit():
    box = BoxDomain(np.zeros(2), np.ones(2))
    norm = NormSpec(math.inf, 2)
    res = 21
    pts = box.lattice(res)
    values = np.minimum(pts[:, 0], pts[:, 1])
    grads = np.where(
        (pts[:, 0] <= pts[:, 1])[:, None], [[1.0, 0.0]], [[0.0, 1.0]]
    )
    target = FitTarget(
        SampledFunction(box, res, values, gradients=grads), 0.05, 0.35, norm
    )
    report = fit_adaptive(target, 64, "relu", seed=0)
    assert report.converged


def test_report_validation():
    target = _target_1d(_kink, _kink_grad, 1e-8, 1e-8)
    with pytest.raises(ValueError):
        fit_c1(target, 0, "relu")
    with pytest.raises(ValueError):
        fit_c1(target, 4, "swish")
    with pytest.raises(ValueError):
        fit_adaptive(target, 0, "relu")
    with pytest.raises(ValueError):
        FitTarget(target.samples, -1.0, 1.0, ABS)
    plain = SampledFunction(UNIT, 5, np.zeros(5))
    with pytest.raises(ValueError):
        FitTarget(plain, 1.0, 1.0, ABS)
