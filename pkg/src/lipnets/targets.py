"""Builtin approximation targets so experiments need no external data.

Each entry carries its natural domain, norm, and Lipschitz constant, plus
a factory producing a batched evaluable ((n, d) -> (n,)).  The factory
takes a seed; only the randomized target uses it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import BoxDomain, NormSpec
from .extension import random_lipschitz_mixture

__all__ = ["BuiltinTarget", "TARGETS", "builtin_target", "target_names"]


@dataclass(frozen=True, eq=False)
class BuiltinTarget:
    name: str
    d: int
    lipschitz_bound: float
    domain: BoxDomain
    norm: NormSpec
    factory: Callable[[int], Callable[[np.ndarray], np.ndarray]]

    def make(self, seed: int = 0) -> Callable[[np.ndarray], np.ndarray]:
        return self.factory(seed)


def _abs_shift(_seed: int):
    def f(x: np.ndarray) -> np.ndarray:
        return np.abs(np.asarray(x, float)[:, 0] - 0.5)

    return f


def _min2d(_seed: int):
    def f(x: np.ndarray) -> np.ndarray:
        return np.asarray(x, float).min(axis=1)

    return f


def _sin_scaled(_seed: int):
    def f(x: np.ndarray) -> np.ndarray:
        return np.sin(math.pi * np.asarray(x, float)[:, 0]) / math.pi

    return f


def _zero(_seed: int):
    def f(x: np.ndarray) -> np.ndarray:
        return np.zeros(np.asarray(x, float).shape[0])

    return f


_UNIT_1D = BoxDomain(np.zeros(1), np.ones(1))
_UNIT_2D = BoxDomain(np.zeros(2), np.ones(2))


def _randomized_mcshane(seed: int):
    rng = np.random.default_rng(seed)
    return random_lipschitz_mixture(
        rng,
        _UNIT_1D,
        NormSpec(p=math.inf, d=1),
        lipschitz_bound=1.0,
        anchor=_UNIT_1D.lower,
    )


TARGETS: dict[str, BuiltinTarget] = {
    "abs-shift": BuiltinTarget(
        name="abs-shift",
        d=1,
        lipschitz_bound=1.0,
        domain=_UNIT_1D,
        norm=NormSpec(p=math.inf, d=1),
        factory=_abs_shift,
    ),
    "min2d": BuiltinTarget(
        name="min2d",
        d=2,
        lipschitz_bound=1.0,
        domain=_UNIT_2D,
        norm=NormSpec(p=math.inf, d=2),
        factory=_min2d,
    ),
    "sin-scaled": BuiltinTarget(
        name="sin-scaled",
        d=1,
        lipschitz_bound=1.0,
        domain=_UNIT_1D,
        norm=NormSpec(p=math.inf, d=1),
        factory=_sin_scaled,
    ),
    "zero": BuiltinTarget(
        name="zero",
        d=1,
        lipschitz_bound=1.0,
        domain=_UNIT_1D,
        norm=NormSpec(p=math.inf, d=1),
        factory=_zero,
    ),
    "randomized-mcshane": BuiltinTarget(
        name="randomized-mcshane",
        d=1,
        lipschitz_bound=1.0,
        domain=_UNIT_1D,
        norm=NormSpec(p=math.inf, d=1),
        factory=_randomized_mcshane,
    ),
}


def builtin_target(name: str) -> BuiltinTarget:
    try:
        return TARGETS[name]
    except KeyError:
        known = ", ".join(sorted(TARGETS))
        raise KeyError(f"unknown target {name!r}; known targets: {known}") from None


def target_names() -> list[str]:
    return sorted(TARGETS)
