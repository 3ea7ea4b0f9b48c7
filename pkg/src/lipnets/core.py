"""Normed geometry shared across the package.

Rescaled p-norms and their duals, axis-aligned box domains with regular
lattices, and containers for functions sampled on those lattices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.spatial.distance import cdist

__all__ = [
    "SUPPORTED_EXPONENTS",
    "SampleConsistencyError",
    "CapacityError",
    "NormSpec",
    "l1_conversion_constant",
    "euclidean_conversion_constant",
    "BoxDomain",
    "BoxRescaling",
    "affine_rescale",
    "SampledFunction",
    "pairwise_distance",
    "save_sampled_csv",
    "load_sampled_csv",
    "derived_seed",
]

SUPPORTED_EXPONENTS = (1.0, 2.0, math.inf)

_CDIST_METRIC = {1.0: "cityblock", 2.0: "euclidean", math.inf: "chebyshev"}


class SampleConsistencyError(ValueError):
    """Scattered samples contradict the declared Lipschitz constant."""


class CapacityError(RuntimeError):
    """An enumeration would exceed its configured size cap."""


def derived_seed(*parts: int) -> int:
    """Deterministically derive a child seed from integer parts."""
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


@dataclass(frozen=True)
class NormSpec:
    """A p-norm on R^d rescaled so the all-ones vector has norm exactly 1.

    The scale factor is d**(-1/p) for finite p and 1 for p = inf, which
    makes the maximum of the norm over the unit cube equal to 1.  Only
    p in {1, 2, inf} is supported; these have closed-form dual norms.
    """

    p: float
    d: int

    def __post_init__(self) -> None:
        p = float(self.p)
        if p not in SUPPORTED_EXPONENTS:
            raise ValueError(f"unsupported exponent {self.p!r}; use 1, 2 or inf")
        if int(self.d) < 1:
            raise ValueError("dimension must be a positive integer")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "d", int(self.d))

    @property
    def scale(self) -> float:
        return 1.0 if math.isinf(self.p) else self.d ** (-1.0 / self.p)

    @property
    def dual_exponent(self) -> float:
        if self.p == 1.0:
            return math.inf
        if math.isinf(self.p):
            return 1.0
        return 2.0

    def _check(self, x) -> np.ndarray:
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0 or arr.shape[-1] != self.d:
            raise ValueError(
                f"expected vectors with last axis of length {self.d}, got shape {arr.shape}"
            )
        return arr

    def eval(self, x):
        """Norm of one vector or a batch (last axis holds coordinates)."""
        arr = self._check(x)
        out = self.scale * _raw_p_norm(arr, self.p)
        return float(out) if np.ndim(out) == 0 else out

    def dual(self, v):
        """Dual norm sup{x.v : eval(x) <= 1}; conjugate norm over 1/scale."""
        arr = self._check(v)
        out = _raw_p_norm(arr, self.dual_exponent) / self.scale
        return float(out) if np.ndim(out) == 0 else out


def _raw_p_norm(arr: np.ndarray, p: float) -> np.ndarray:
    if p == 1.0:
        return np.abs(arr).sum(axis=-1)
    if p == 2.0:
        return np.sqrt((arr * arr).sum(axis=-1))
    return np.abs(arr).max(axis=-1)


def l1_conversion_constant(norm: NormSpec) -> float:
    """Smallest C with (1/d) * sum_i |x_i| <= C * norm(x) for all x.

    The ratio of the normalized l1 norm to any supported rescaled p-norm
    is maximised at the all-ones vector, where both sides equal 1, so the
    constant is 1 for the whole family; the arithmetic below keeps the
    derivation explicit.
    """
    d, p = norm.d, norm.p
    if math.isinf(p):
        return 1.0  # sum|x_i|/d <= max|x_i|, tight at all-ones
    # l1(x) <= d**(1-1/p) * lp(x), tight at all-ones.
    return (d ** (1.0 - 1.0 / p) / d) / norm.scale


def euclidean_conversion_constant(norm: NormSpec) -> float:
    """Smallest c with norm(x) <= c * euclidean_length(x) for all x."""
    p, d = norm.p, norm.d
    if math.isinf(p):
        return 1.0  # max|x_i| <= l2(x), tight on coordinate axes
    if p == 2.0:
        return norm.scale
    return norm.scale * math.sqrt(d)  # l1(x) <= sqrt(d) l2(x), tight at all-ones


def pairwise_distance(norm: NormSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Distance matrix (len(x), len(y)) under the given norm."""
    return norm.scale * cdist(
        np.atleast_2d(np.asarray(x, float)),
        np.atleast_2d(np.asarray(y, float)),
        metric=_CDIST_METRIC[norm.p],
    )


@dataclass(frozen=True, eq=False)
class BoxDomain:
    """Axis-aligned box with strictly positive edge lengths."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float)).copy()
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float)).copy()
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ValueError("lower and upper must be 1-D arrays of equal length")
        if not (np.isfinite(lower).all() and np.isfinite(upper).all()):
            raise ValueError("box corners must be finite")
        if not (lower < upper).all():
            raise ValueError(f"degenerate box: need lower < upper, got {lower} vs {upper}")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def d(self) -> int:
        return self.lower.shape[0]

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def max_edge(self) -> float:
        return float(self.widths.max())

    def axes(self, resolution: int) -> list[np.ndarray]:
        if resolution < 2:
            raise ValueError("lattice resolution must be at least 2")
        return [
            np.linspace(self.lower[j], self.upper[j], resolution)
            for j in range(self.d)
        ]

    def lattice(self, resolution: int) -> np.ndarray:
        """Regular grid including both faces, row-major (first axis slowest)."""
        mesh = np.meshgrid(*self.axes(resolution), indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, self.d)

    def enlarge(self, margin: float) -> "BoxDomain":
        return BoxDomain(self.lower - margin, self.upper + margin)

    def contains(self, points: np.ndarray, slack: float = 0.0) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, float))
        return (
            (pts >= self.lower - slack) & (pts <= self.upper + slack)
        ).all(axis=1)

    def corners(self) -> np.ndarray:
        mesh = np.meshgrid(*zip(self.lower, self.upper), indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, self.d)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(count, self.d))


@dataclass(frozen=True, eq=False)
class BoxRescaling:
    """Affine map x -> scale * x + offset with its exact inverse."""

    scale: float
    offset: np.ndarray

    def forward(self, x):
        return self.scale * np.asarray(x, float) + self.offset

    def inverse(self, y):
        return (np.asarray(y, float) - self.offset) / self.scale


def affine_rescale(box: BoxDomain) -> BoxRescaling:
    """Map carrying the unit box onto the bounding cube of ``box``.

    The scale is the longest edge and the offset is the lower corner, so
    the image of [0,1]^d contains the box itself and forward/inverse
    compose to the identity up to rounding.
    """
    return BoxRescaling(box.max_edge, box.lower.copy())


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Function values (and optional gradients) on a regular box lattice.

    Values are stored flat in row-major order -- the first coordinate
    varies slowest -- matching ``BoxDomain.lattice``.
    """

    domain: BoxDomain
    resolution: int
    values: np.ndarray
    gradients: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.resolution < 2:
            raise ValueError("resolution must be at least 2")
        values = np.asarray(self.values, dtype=float).copy()
        count = self.resolution ** self.domain.d
        if values.shape != (count,):
            raise ValueError(
                f"expected {count} values for resolution {self.resolution} in "
                f"dimension {self.domain.d}, got shape {values.shape}"
            )
        if not np.isfinite(values).all():
            raise ValueError("sampled values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.gradients is not None:
            grads = np.asarray(self.gradients, dtype=float).copy()
            if grads.shape != (count, self.domain.d):
                raise ValueError(
                    f"expected gradients of shape {(count, self.domain.d)}, "
                    f"got {grads.shape}"
                )
            if not np.isfinite(grads).all():
                raise ValueError("sampled gradients must be finite")
            grads.setflags(write=False)
            object.__setattr__(self, "gradients", grads)

    def points(self) -> np.ndarray:
        return self.domain.lattice(self.resolution)

    def grid_values(self) -> np.ndarray:
        return self.values.reshape((self.resolution,) * self.domain.d)

    def interpolator(self):
        """Multilinear interpolant as a batched callable (n, d) -> (n,)."""
        rgi = RegularGridInterpolator(
            tuple(self.domain.axes(self.resolution)),
            self.grid_values(),
            method="linear",
            bounds_error=False,
            fill_value=None,
        )

        def evaluate(points):
            return np.asarray(rgi(np.atleast_2d(np.asarray(points, float))), float)

        return evaluate


_SAMPLED_MAGIC = "sampled-function,v1"


def save_sampled_csv(fn: SampledFunction, path) -> None:
    """Write a self-describing CSV: header lines, then one row per lattice
    point (row-major) holding the value and, if present, the gradient."""
    lines = [_SAMPLED_MAGIC]
    lines.append(f"d,{fn.domain.d}")
    lines.append(f"resolution,{fn.resolution}")
    lines.append("lower," + ",".join(repr(float(v)) for v in fn.domain.lower))
    lines.append("upper," + ",".join(repr(float(v)) for v in fn.domain.upper))
    lines.append(f"gradients,{0 if fn.gradients is None else 1}")
    for i, v in enumerate(fn.values):
        row = [repr(float(v))]
        if fn.gradients is not None:
            row.extend(repr(float(g)) for g in fn.gradients[i])
        lines.append(",".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_sampled_csv(path) -> SampledFunction:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != _SAMPLED_MAGIC:
        raise ValueError(f"{path}: not a sampled-function CSV")

    def field(idx, key):
        parts = lines[idx].split(",")
        if parts[0] != key:
            raise ValueError(f"{path}: expected '{key}' on line {idx + 1}")
        return parts[1:]

    d = int(field(1, "d")[0])
    resolution = int(field(2, "resolution")[0])
    lower = np.array([float(v) for v in field(3, "lower")])
    upper = np.array([float(v) for v in field(4, "upper")])
    has_grad = bool(int(field(5, "gradients")[0]))
    body = lines[6:]
    count = resolution ** d
    if len(body) != count:
        raise ValueError(f"{path}: expected {count} data rows, found {len(body)}")
    rows = [[float(v) for v in ln.split(",")] for ln in body]
    data = np.asarray(rows, float)
    values = data[:, 0]
    gradients = data[:, 1:] if has_grad else None
    if has_grad and data.shape[1] != 1 + d:
        raise ValueError(f"{path}: gradient rows must have {d} components")
    return SampledFunction(BoxDomain(lower, upper), resolution, values, gradients)
