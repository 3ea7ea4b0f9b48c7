"""Smoothing by discrete mollification.

A bump kernel supported strictly inside a Euclidean ball is discretised on
a tensor-product lattice; mollification is then the convex combination

    mollify(f)(x) = sum_j weight_j * f(x - offset_j),

which preserves any Lipschitz bound of f exactly and changes values by at
most (Euclidean Lipschitz constant) * radius.  Gradients of the smoothed
function are taken by central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BoxDomain

__all__ = [
    "MollifierKernel",
    "build_kernel",
    "mollify_eval",
    "mollify_batch",
    "mollify_grad_eval",
    "mollify_grad_batch",
    "gradient_deviation",
    "fidelity_curve",
]


@dataclass(frozen=True, eq=False)
class MollifierKernel:
    """Quadrature offsets and weights for one smoothing radius."""

    radius: float
    d: int
    offsets: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        offsets = np.atleast_2d(np.asarray(self.offsets, float)).copy()
        weights = np.atleast_1d(np.asarray(self.weights, float)).copy()
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if offsets.shape != (weights.shape[0], self.d):
            raise ValueError("offsets and weights are inconsistent")
        lengths = np.sqrt((offsets * offsets).sum(axis=1))
        if not (lengths < self.radius).all():
            raise ValueError("every offset must lie strictly inside the ball")
        if not (weights > 0).all():
            raise ValueError("weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")
        offsets.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "weights", weights)

    @property
    def count(self) -> int:
        return self.weights.shape[0]


def build_kernel(radius: float, d: int, quad_resolution: int) -> MollifierKernel:
    """Tensor-lattice discretisation of the standard bump on a ball.

    The bump exp(1 / (|x|^2/radius^2 - 1)) is sampled on a regular lattice
    of the cube [-radius, radius]^d with an odd number of points per axis
    (so the centre is a node), restricted to the open ball, and the weights
    are renormalised to sum to one.
    """
    if quad_resolution < 3 or quad_resolution % 2 == 0:
        raise ValueError("quad_resolution must be odd and at least 3")
    if not radius > 0:
        raise ValueError("radius must be positive")
    axis = np.linspace(-radius, radius, quad_resolution)
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    offsets = np.stack(mesh, axis=-1).reshape(-1, d)
    r2 = (offsets * offsets).sum(axis=1) / (radius * radius)
    inside = r2 < 1.0
    with np.errstate(divide="ignore"):
        raw = np.where(inside, np.exp(1.0 / np.where(inside, r2 - 1.0, -1.0)), 0.0)
    keep = raw > 0.0
    offsets = offsets[keep]
    weights = raw[keep] / raw[keep].sum()
    return MollifierKernel(float(radius), int(d), offsets, weights)


def mollify_batch(f, kernel: MollifierKernel, points: np.ndarray) -> np.ndarray:
    """Smoothed values at a batch of points; f maps (n, d) -> (n,)."""
    pts = np.atleast_2d(np.asarray(points, float))
    if pts.shape[1] != kernel.d:
        raise ValueError("query dimension does not match the kernel")
    shifted = (pts[:, None, :] - kernel.offsets[None, :, :]).reshape(-1, kernel.d)
    sampled = np.asarray(f(shifted), float).reshape(pts.shape[0], kernel.count)
    return sampled @ kernel.weights


def mollify_eval(f, kernel: MollifierKernel, x) -> float:
    """Smoothed value at a single point."""
    return float(mollify_batch(f, kernel, np.asarray(x, float)[None, :])[0])


def mollify_grad_batch(
    f, kernel: MollifierKernel, points: np.ndarray, step: float
) -> np.ndarray:
    """Central finite-difference gradients of the smoothed function."""
    pts = np.atleast_2d(np.asarray(points, float))
    if not step > 0:
        raise ValueError("finite-difference step must be positive")
    n, d = pts.shape
    stacked = np.empty((2 * d * n, d))
    for j in range(d):
        plus = pts.copy()
        plus[:, j] += step
        minus = pts.copy()
        minus[:, j] -= step
        stacked[2 * j * n : (2 * j + 1) * n] = plus
        stacked[(2 * j + 1) * n : (2 * j + 2) * n] = minus
    smoothed = mollify_batch(f, kernel, stacked)
    grads = np.empty((n, d))
    for j in range(d):
        hi = smoothed[2 * j * n : (2 * j + 1) * n]
        lo = smoothed[(2 * j + 1) * n : (2 * j + 2) * n]
        grads[:, j] = (hi - lo) / (2.0 * step)
    return grads


def mollify_grad_eval(f, kernel: MollifierKernel, x, step: float) -> np.ndarray:
    return mollify_grad_batch(f, kernel, np.asarray(x, float)[None, :], step)[0]


def gradient_deviation(
    f,
    grad_f,
    radius: float,
    box: BoxDomain,
    resolution: int = 101,
    quad_resolution: int = 21,
    step: float | None = None,
) -> float:
    """Sup over a lattice and coordinates of |smoothed gradient - true gradient|.

    Both f and grad_f are batched callables; the deviation tends to zero as
    the radius shrinks when f is continuously differentiable.
    """
    kernel = build_kernel(radius, box.d, quad_resolution)
    pts = box.lattice(resolution)
    h = radius / 20.0 if step is None else step
    approx = mollify_grad_batch(f, kernel, pts, h)
    exact = np.atleast_2d(np.asarray(grad_f(pts), float))
    if exact.shape != approx.shape:
        exact = exact.reshape(approx.shape)
    return float(np.abs(approx - exact).max())


def fidelity_curve(
    d: int, radii=(0.2, 0.1, 0.05, 0.025), resolution: int = 101
) -> list[tuple[float, float]]:
    """Gradient deviation of a fixed smooth reference for a ladder of radii.

    Useful for plotting how fast mollification converges; the reference is
    a product of scaled sines on the unit box.
    """
    box = BoxDomain(np.zeros(d), np.ones(d))

    def f(pts):
        pts = np.atleast_2d(np.asarray(pts, float))
        return np.sin(2.0 * pts).sum(axis=1) / (2.0 * d)

    def grad_f(pts):
        pts = np.atleast_2d(np.asarray(pts, float))
        return np.cos(2.0 * pts) / d

    res = resolution if d == 1 else 21
    return [
        (float(r), gradient_deviation(f, grad_f, r, box, resolution=res))
        for r in radii
    ]
