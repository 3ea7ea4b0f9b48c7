"""Lipschitz- and bound-preserving extension from scattered samples.

The extension of a consistent sample set is the clamped lower envelope of
cones,

    ext(x) = clamp( min_i (value_i + L * norm(x - point_i)), -B, +B ),

which is L-Lipschitz in the chosen norm, agrees with every sample, and
never exceeds the declared sup bound B.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    BoxDomain,
    NormSpec,
    SampleConsistencyError,
    SampledFunction,
    pairwise_distance,
)

__all__ = [
    "ExtensionProblem",
    "mcshane_extend",
    "extend_to_grid",
    "load_samples_csv",
    "random_lipschitz_mixture",
]

_EVAL_CHUNK = 2048


@dataclass(frozen=True, eq=False)
class ExtensionProblem:
    """Scattered samples together with the Lipschitz/sup bounds to honour."""

    points: np.ndarray
    values: np.ndarray
    lipschitz_bound: float
    norm: NormSpec
    sup_bound: float

    def __post_init__(self) -> None:
        points = np.atleast_2d(np.asarray(self.points, float)).copy()
        values = np.atleast_1d(np.asarray(self.values, float)).copy()
        if points.shape[0] == 0:
            raise ValueError("extension requires at least one sample")
        if points.shape[1] != self.norm.d:
            raise ValueError(
                f"sample dimension {points.shape[1]} does not match norm dimension {self.norm.d}"
            )
        if values.shape != (points.shape[0],):
            raise ValueError("need exactly one value per sample point")
        if not (np.isfinite(points).all() and np.isfinite(values).all()):
            raise ValueError("samples must be finite")
        if not self.lipschitz_bound > 0:
            raise ValueError("lipschitz_bound must be positive")
        if self.sup_bound < np.abs(values).max() - 1e-12:
            raise ValueError(
                f"sup_bound {self.sup_bound} is below the largest sample "
                f"magnitude {np.abs(values).max()}"
            )
        points.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "values", values)
        self._check_compatibility(points, values)

    def _check_compatibility(self, points: np.ndarray, values: np.ndarray) -> None:
        # |v_i - v_j| <= L * dist(p_i, p_j) for every pair, with a little
        # rounding slack so genuinely Lipschitz data is never rejected.
        n = points.shape[0]
        for start in range(0, n, _EVAL_CHUNK):
            stop = min(start + _EVAL_CHUNK, n)
            dist = pairwise_distance(self.norm, points[start:stop], points)
            gap = np.abs(values[start:stop, None] - values[None, :])
            bound = self.lipschitz_bound * dist
            bad = gap > bound * (1 + 1e-9) + 1e-12
            if bad.any():
                i_loc, j = np.argwhere(bad)[0]
                i = start + int(i_loc)
                raise SampleConsistencyError(
                    f"samples {i} and {int(j)} violate the Lipschitz bound: "
                    f"|{values[i]} - {values[j]}| > "
                    f"{self.lipschitz_bound} * {dist[i_loc, j]} "
                    f"(points {points[i]} and {points[int(j)]})"
                )

    @property
    def count(self) -> int:
        return self.points.shape[0]


def mcshane_extend(problem: ExtensionProblem, x) -> np.ndarray:
    """Evaluate the clamped cone envelope at one point or a batch."""
    pts = np.asarray(x, float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != problem.norm.d:
        raise ValueError(
            f"query dimension {pts.shape[1]} does not match norm dimension {problem.norm.d}"
        )
    out = np.empty(pts.shape[0])
    for start in range(0, pts.shape[0], _EVAL_CHUNK):
        stop = min(start + _EVAL_CHUNK, pts.shape[0])
        dist = pairwise_distance(problem.norm, pts[start:stop], problem.points)
        envelope = (problem.values[None, :] + problem.lipschitz_bound * dist).min(axis=1)
        out[start:stop] = envelope
    np.clip(out, -problem.sup_bound, problem.sup_bound, out=out)
    return float(out[0]) if single else out


def extend_to_grid(
    problem: ExtensionProblem, target_box: BoxDomain, resolution: int
) -> SampledFunction:
    """Extension values on a regular lattice of a box containing the samples."""
    if not problem.norm.d == target_box.d:
        raise ValueError("target box dimension does not match the samples")
    if not target_box.contains(problem.points, slack=1e-12).all():
        raise ValueError("target box must contain every sample point")
    lattice = target_box.lattice(resolution)
    values = mcshane_extend(problem, lattice)
    return SampledFunction(target_box, resolution, values)


def load_samples_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read scattered samples: d coordinate columns followed by a value column.

    A single non-numeric header row is permitted and skipped.
    """
    rows = []
    with open(path) as fh:
        for ln in fh:
            ln = ln.strip()
            if not ln:
                continue
            parts = ln.split(",")
            try:
                rows.append([float(v) for v in parts])
            except ValueError:
                if rows:
                    raise ValueError(f"{path}: malformed row {ln!r}")
                continue  # header row
    if not rows:
        raise ValueError(f"{path}: no sample rows found")
    data = np.asarray(rows, float)
    if data.shape[1] < 2:
        raise ValueError(f"{path}: need at least one coordinate column plus a value column")
    return data[:, :-1], data[:, -1]


def random_lipschitz_mixture(
    rng: np.random.Generator,
    box: BoxDomain,
    norm: NormSpec,
    lipschitz_bound: float,
    anchor: np.ndarray | None = None,
    point_count: int | None = None,
):
    """A random Lipschitz function as a mixture of extremal extensions.

    Draws scattered points with compatibly grown values (anchored to 0 at
    ``anchor`` when given) and blends the upper and lower extensions; any
    convex combination of the two keeps the Lipschitz bound.
    """
    k = int(point_count) if point_count is not None else int(rng.integers(4, 12))
    pts = box.sample(rng, k)
    if anchor is not None:
        pts = np.vstack([np.asarray(anchor, float), pts])
    vals = np.zeros(pts.shape[0])
    start = 1 if anchor is not None else 0
    if start == 0:
        vals[0] = rng.uniform(-1.0, 1.0) * lipschitz_bound
        start = 1
    for i in range(start, pts.shape[0]):
        dist = pairwise_distance(norm, pts[i : i + 1], pts[:i])[0]
        lo = (vals[:i] - lipschitz_bound * dist).max()
        hi = (vals[:i] + lipschitz_bound * dist).min()
        vals[i] = rng.uniform(lo, hi)
    bound = float(np.abs(vals).max()) + lipschitz_bound * norm.eval(box.widths)
    upper = ExtensionProblem(pts, vals, lipschitz_bound, norm, bound)
    lower = ExtensionProblem(pts, -vals, lipschitz_bound, norm, bound)
    theta = rng.uniform()

    def evaluate(x):
        hi = mcshane_extend(upper, x)
        lo = -np.asarray(mcshane_extend(lower, x))
        return theta * hi + (1.0 - theta) * lo

    return evaluate
