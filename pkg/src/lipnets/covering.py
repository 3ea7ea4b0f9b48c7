"""Finite coverings of the anchored Lipschitz ball, and the width experiment.

The compactness argument is made constructive: the class of L-Lipschitz
functions on a compact box vanishing at the lower corner is covered by
finitely many lattice functions with quantized values and Lipschitz-
constrained increments.  Fitting a certified network to every covering
element at accuracy eps/2 yields one width that serves *all* targets at
accuracy eps -- the width depends on eps, never on the target.

Elements are realized exactly: 1-D lattice functions by piecewise-linear
interpolation, 2-D ones by the McShane formula (multilinear interpolation
can overshoot the constant under the box-max norm, McShane cannot).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    BoxDomain,
    CapacityError,
    NormSpec,
    SampledFunction,
    derived_seed,
)
from .extension import ExtensionProblem, mcshane_extend, random_lipschitz_mixture
from .pipeline import ApproximationProblem, PipelineReport, approximate

__all__ = [
    "EpsNet",
    "UniformWidthResult",
    "build_eps_net",
    "covering_radius_check",
    "uniform_width_experiment",
    "validate_uniform_width",
]

# Seed stream tags (disjoint from the pipeline's own).
_SEED_ELEMENT, _SEED_RADIUS, _SEED_VALIDATE = 3, 4, 5


def covering_norm(d: int) -> NormSpec:
    """Box-max norm: king-move lattice increments control the constant."""
    return NormSpec(p=math.inf, d=d)


@dataclass(frozen=True, eq=False)
class EpsNet:
    """A finite eps/2-cover of the anchored Lipschitz ball on ``hat_box``."""

    elements: tuple[SampledFunction, ...]
    epsilon: float
    hat_box: BoxDomain
    spacing: float  # lattice step (largest axis step)
    quantum: float  # value quantization step (0 for the single-element net)
    lipschitz_bound: float
    norm: NormSpec

    @property
    def size(self) -> int:
        return len(self.elements)

    def element_function(self, index: int):
        """The element as an exactly Lipschitz evaluable on the whole box."""
        sampled = self.elements[index]
        if self.hat_box.d == 1:
            return sampled.interpolator()
        slack = self.lipschitz_bound * max(self.spacing, 1.0)
        problem = ExtensionProblem(
            points=sampled.points(),
            values=sampled.values,
            lipschitz_bound=self.lipschitz_bound,
            norm=self.norm,
            sup_bound=float(np.abs(sampled.values).max()) + slack,
        )
        return lambda x: mcshane_extend(problem, x)


def _zero_net(lipschitz_bound, hat_box, epsilon, norm) -> EpsNet:
    resolution = 2
    zeros = np.zeros(resolution**hat_box.d)
    element = SampledFunction(domain=hat_box, resolution=resolution, values=zeros)
    return EpsNet(
        elements=(element,),
        epsilon=float(epsilon),
        hat_box=hat_box,
        spacing=float(hat_box.widths.max()),
        quantum=0.0,
        lipschitz_bound=float(lipschitz_bound),
        norm=norm,
    )


def build_eps_net(
    lipschitz_bound: float,
    hat_box: BoxDomain,
    epsilon: float,
    element_cap: int = 200_000,
) -> EpsNet:
    """Enumerate all quantized Lipschitz lattice functions vanishing at the anchor.

    Spacing and quantum: h = eps/(2L) in 1-D and eps/(L(d+1)) in 2-D,
    q = L*h, so that quantization error q/2 plus the between-lattice-point
    error stays within eps/2.  Raises ``CapacityError`` when the element
    count would exceed ``element_cap``.
    """
    d = hat_box.d
    if d not in (1, 2):
        raise ValueError("coverings are enumerable at desk scale only for d in {1, 2}")
    if not (lipschitz_bound > 0 and epsilon > 0):
        raise ValueError("lipschitz_bound and epsilon must be positive")
    norm = covering_norm(d)
    bound = float(lipschitz_bound)

    # A single zero element covers everything when the ball is small enough:
    # |g(x)| = |g(x) - g(anchor)| <= L * distance to the anchor.
    if bound * float(norm.eval(hat_box.widths)) <= epsilon / 2.0:
        return _zero_net(bound, hat_box, epsilon, norm)

    step_target = epsilon / (2.0 * bound) if d == 1 else epsilon / (bound * (d + 1))
    cells = max(1, int(np.ceil(hat_box.widths.max() / step_target - 1e-9)))
    resolution = cells + 1
    steps = hat_box.widths / cells
    quantum = bound * float(steps.min())

    if d == 1:
        count = 3**cells
        if count > element_cap:
            raise CapacityError(
                f"{count} covering elements exceed the cap of {element_cap}"
            )
        values = []
        for increments in itertools.product((-quantum, 0.0, quantum), repeat=cells):
            values.append(np.concatenate(([0.0], np.cumsum(increments))))
        elements = tuple(
            SampledFunction(domain=hat_box, resolution=resolution, values=v)
            for v in values
        )
        return EpsNet(
            elements=elements,
            epsilon=float(epsilon),
            hat_box=hat_box,
            spacing=float(steps.max()),
            quantum=quantum,
            lipschitz_bound=bound,
            norm=norm,
        )

    # d == 2: depth-first enumeration over lattice nodes in row-major order.
    # Values are integer multiples of the quantum; a node is constrained
    # against its already-assigned king-move neighbours, which makes every
    # complete assignment Lipschitz for the box-max norm globally.
    allowed_axis0 = int(np.floor(bound * steps[0] * (1 + 1e-12) / quantum))
    allowed_axis1 = int(np.floor(bound * steps[1] * (1 + 1e-12) / quantum))
    allowed_diag = int(np.floor(bound * float(steps.max()) * (1 + 1e-12) / quantum))
    n0 = n1 = resolution

    def neighbours(i0: int, i1: int):
        if i1 > 0:
            yield (i0, i1 - 1, allowed_axis1)
        if i0 > 0:
            if i1 > 0:
                yield (i0 - 1, i1 - 1, allowed_diag)
            yield (i0 - 1, i1, allowed_axis0)
            if i1 < n1 - 1:
                yield (i0 - 1, i1 + 1, allowed_diag)

    grid = np.zeros((n0, n1), dtype=np.int64)
    complete: list[np.ndarray] = []
    order = [(i0, i1) for i0 in range(n0) for i1 in range(n1)][1:]

    def descend(position: int) -> None:
        if position == len(order):
            if len(complete) >= element_cap:
                raise CapacityError(
                    f"covering elements exceed the cap of {element_cap}"
                )
            complete.append(grid.flatten().astype(float) * quantum)
            return
        i0, i1 = order[position]
        low, high = -(1 << 40), 1 << 40
        for j0, j1, slack in neighbours(i0, i1):
            low = max(low, grid[j0, j1] - slack)
            high = min(high, grid[j0, j1] + slack)
        for value in range(low, high + 1):
            grid[i0, i1] = value
            descend(position + 1)
        grid[i0, i1] = 0

    descend(0)
    elements = tuple(
        SampledFunction(domain=hat_box, resolution=resolution, values=v)
        for v in complete
    )
    return EpsNet(
        elements=elements,
        epsilon=float(epsilon),
        hat_box=hat_box,
        spacing=float(steps.max()),
        quantum=quantum,
        lipschitz_bound=bound,
        norm=norm,
    )


def _random_lattice_lipschitz(rng, hat_box: BoxDomain, norm: NormSpec,
                              bound: float, resolution: int):
    """Random Lipschitz function via constrained lattice values (greedy fill)."""
    d = hat_box.d
    steps = hat_box.widths / (resolution - 1)
    if d == 1:
        increments = rng.uniform(-bound * steps[0], bound * steps[0], resolution - 1)
        values = np.concatenate(([0.0], np.cumsum(increments)))
        sampled = SampledFunction(domain=hat_box, resolution=resolution, values=values)
        return sampled.interpolator()
    grid = np.zeros((resolution, resolution))
    for i0 in range(resolution):
        for i1 in range(resolution):
            if i0 == 0 and i1 == 0:
                continue
            low, high = -math.inf, math.inf
            for j0, j1, dist in (
                (i0, i1 - 1, steps[1]),
                (i0 - 1, i1 - 1, float(steps.max())),
                (i0 - 1, i1, steps[0]),
                (i0 - 1, i1 + 1, float(steps.max())),
            ):
                if 0 <= j0 < i0 or (j0 == i0 and 0 <= j1 < i1):
                    if 0 <= j1 < resolution:
                        low = max(low, grid[j0, j1] - bound * dist)
                        high = min(high, grid[j0, j1] + bound * dist)
            grid[i0, i1] = rng.uniform(low, high)
    problem = ExtensionProblem(
        points=hat_box.lattice(resolution),
        values=grid.flatten(),
        lipschitz_bound=bound,
        norm=norm,
        sup_bound=float(np.abs(grid).max()) + bound,
    )
    return lambda x: mcshane_extend(problem, x)


def covering_radius_check(net: EpsNet, trials: int, seed: int = 0) -> float:
    """Max over random Lipschitz trial functions of the distance to the net.

    Trial functions alternate between finer-lattice random increments and
    McShane mixtures; distances are grid sup-distances.  The result must
    be at most eps/2 for the net to do its job.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(seed)
    d = net.hat_box.d
    base = net.elements[0].resolution
    probe_res = max(33, 8 * (base - 1) + 1) if d == 1 else max(9, 4 * (base - 1) + 1)
    probe = net.hat_box.lattice(probe_res)
    element_values = np.stack(
        [np.asarray(net.element_function(i)(probe), float) for i in range(net.size)]
    )
    anchor = net.hat_box.lower
    fine_res = 2 * (base - 1) + 1
    worst = 0.0
    for trial in range(trials):
        if trial % 2 == 0:
            f = _random_lattice_lipschitz(
                rng, net.hat_box, net.norm, net.lipschitz_bound, fine_res
            )
        else:
            f = random_lipschitz_mixture(
                rng, net.hat_box, net.norm, net.lipschitz_bound, anchor=anchor
            )
        g = np.asarray(f(probe), float)
        distance = float(np.abs(element_values - g).max(axis=1).min())
        worst = max(worst, distance)
    return worst


@dataclass(frozen=True, eq=False)
class UniformWidthResult:
    """One width that serves every target at the requested accuracy."""

    eps_net: EpsNet
    element_reports: tuple[PipelineReport, ...]
    m_uniform: int
    covering_radius: float
    epsilon: float
    lipschitz_bound: float
    domain: BoxDomain
    activation: str
    seed: int

    def summary_json_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "lipschitz_bound": self.lipschitz_bound,
            "net_size": self.eps_net.size,
            "m_uniform": self.m_uniform,
            "covering_radius": self.covering_radius,
            "spacing": self.eps_net.spacing,
            "quantum": self.eps_net.quantum,
            "activation": self.activation,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary_json_dict(), indent=2, sort_keys=True) + "\n"


def uniform_width_experiment(
    lipschitz_bound: float,
    domain: BoxDomain,
    hat_box: BoxDomain,
    epsilon: float,
    activation: str = "relu",
    seed: int = 0,
    *,
    max_width: int = 256,
    radius_trials: int = 500,
    element_cap: int = 200_000,
    refine_iters: int = 150,
) -> UniformWidthResult:
    """Fit a certified network to every covering element at accuracy eps/2.

    The returned ``m_uniform`` is the maximum width over elements: any
    Lipschitz target is then within eps of one of the stored networks.
    Raises if the covering radius check fails or any element's pipeline
    run fails (the error names the element).
    """
    net = build_eps_net(lipschitz_bound, hat_box, epsilon, element_cap=element_cap)
    radius = covering_radius_check(
        net, radius_trials, seed=derived_seed(seed, _SEED_RADIUS)
    )
    if radius > epsilon / 2.0 * (1 + 1e-9):
        raise RuntimeError(
            f"covering radius {radius:.6g} exceeds epsilon/2 = {epsilon / 2:.6g}"
        )
    reports = []
    for index in range(net.size):
        problem = ApproximationProblem(
            target=net.element_function(index),
            lipschitz_bound=lipschitz_bound,
            domain=hat_box,
            epsilon=epsilon / 2.0,
            norm=net.norm,
            activation=activation,
            seed=derived_seed(seed, _SEED_ELEMENT, index),
        )
        report = approximate(problem, max_width, refine_iters=refine_iters)
        if not report.success:
            raise RuntimeError(
                f"pipeline failed on covering element {index}: "
                f"{report.failure_reason}"
            )
        reports.append(report)
    m_uniform = max(report.stages["width"] for report in reports)
    return UniformWidthResult(
        eps_net=net,
        element_reports=tuple(reports),
        m_uniform=int(m_uniform),
        covering_radius=radius,
        epsilon=float(epsilon),
        lipschitz_bound=float(lipschitz_bound),
        domain=domain,
        activation=activation,
        seed=seed,
    )


def validate_uniform_width(
    result: UniformWidthResult, count: int = 50, seed: int = 0
) -> np.ndarray:
    """Sup errors of the nearest stored network on fresh random targets.

    Every entry should be at most epsilon: distance to the nearest covering
    element (<= eps/2) plus that element's fitting error (<= eps/2).
    Validation never refits, so it cannot change ``m_uniform``.
    """
    net = result.eps_net
    d = net.hat_box.d
    probe_res = 1001 if d == 1 else 41
    probe = net.hat_box.lattice(probe_res)
    element_values = np.stack(
        [np.asarray(net.element_function(i)(probe), float) for i in range(net.size)]
    )
    rng = np.random.default_rng(derived_seed(seed, _SEED_VALIDATE))
    errors = np.empty(count)
    for k in range(count):
        f = random_lipschitz_mixture(
            rng, net.hat_box, net.norm, result.lipschitz_bound,
            anchor=net.hat_box.lower,
        )
        g = np.asarray(f(probe), float)
        nearest = int(np.abs(element_values - g).max(axis=1).argmin())
        fitted = result.element_reports[nearest].net
        errors[k] = float(np.abs(g - fitted(probe)).max())
    return errors
