"""One-hidden-layer networks: evaluation, gradients, reparameterisations.

A network with width m on R^d computes

    f(x) = b + sum_i a_i * act(w_i . x + c_i),

with w_i the rows of W.  Width 0 is allowed and denotes the constant b.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

__all__ = [
    "Activation",
    "ACTIVATIONS",
    "ShallowNet",
    "hat_net",
    "save_net_json",
    "load_net_json",
]


@dataclass(frozen=True, eq=False)
class Activation:
    """Scalar activation with its derivatives and global slope bound."""

    name: str
    lipschitz_constant: float
    value: callable
    derivative: callable
    second_derivative: callable


def _relu(z):
    return np.maximum(z, 0.0)


def _relu_prime(z):
    # Weak-derivative convention: slope 0 exactly at the kink.
    return (z > 0.0).astype(float)


def _tanh_prime(z):
    t = np.tanh(z)
    return 1.0 - t * t


def _tanh_second(z):
    t = np.tanh(z)
    return -2.0 * t * (1.0 - t * t)


def _sigmoid_prime(z):
    s = expit(z)
    return s * (1.0 - s)


def _sigmoid_second(z):
    s = expit(z)
    return s * (1.0 - s) * (1.0 - 2.0 * s)


def _softplus(z):
    return np.logaddexp(0.0, z)


ACTIVATIONS: dict[str, Activation] = {
    "relu": Activation("relu", 1.0, _relu, _relu_prime, lambda z: np.zeros_like(np.asarray(z, float))),
    "tanh": Activation("tanh", 1.0, np.tanh, _tanh_prime, _tanh_second),
    "sigmoid": Activation("sigmoid", 0.25, expit, _sigmoid_prime, _sigmoid_second),
    "softplus": Activation("softplus", 1.0, _softplus, expit, _sigmoid_prime),
}


@dataclass(frozen=True, eq=False)
class ShallowNet:
    """Immutable parameter bundle for a one-hidden-layer network."""

    activation: str
    b: float
    a: np.ndarray
    W: np.ndarray
    c: np.ndarray

    def __post_init__(self) -> None:
        if self.activation not in ACTIVATIONS:
            raise ValueError(
                f"unknown activation {self.activation!r}; "
                f"choose from {sorted(ACTIVATIONS)}"
            )
        a = np.atleast_1d(np.asarray(self.a, float)).copy()
        W = np.asarray(self.W, float).copy()
        c = np.atleast_1d(np.asarray(self.c, float)).copy()
        if W.ndim != 2:
            raise ValueError("W must be a 2-D array (width, dimension)")
        m, d = W.shape
        if d < 1:
            raise ValueError("input dimension must be at least 1")
        if a.shape != (m,) or c.shape != (m,):
            raise ValueError("a, W and c must share the same width")
        if not (
            np.isfinite(self.b)
            and np.isfinite(a).all()
            and np.isfinite(W).all()
            and np.isfinite(c).all()
        ):
            raise ValueError("network parameters must be finite")
        for arr in (a, W, c):
            arr.setflags(write=False)
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "c", c)

    @property
    def d(self) -> int:
        return self.W.shape[1]

    @property
    def width(self) -> int:
        return self.W.shape[0]

    def _check(self, x) -> tuple[np.ndarray, bool]:
        pts = np.asarray(x, float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[1] != self.d:
            raise ValueError(
                f"input dimension {pts.shape[1]} does not match network dimension {self.d}"
            )
        return pts, single

    def __call__(self, x):
        pts, single = self._check(x)
        act = ACTIVATIONS[self.activation]
        if self.width == 0:
            out = np.full(pts.shape[0], self.b)
        else:
            out = self.b + act.value(pts @ self.W.T + self.c) @ self.a
        return float(out[0]) if single else out

    def gradient(self, x):
        pts, single = self._check(x)
        act = ACTIVATIONS[self.activation]
        if self.width == 0:
            grads = np.zeros_like(pts)
        else:
            slopes = act.derivative(pts @ self.W.T + self.c) * self.a
            grads = slopes @ self.W
        return grads[0] if single else grads

    def scale_shift(self, alpha: float, beta: float) -> "ShallowNet":
        """Network computing alpha * f(x) + beta."""
        return ShallowNet(
            self.activation, alpha * self.b + beta, alpha * self.a, self.W, self.c
        )

    def precompose_affine(self, scale: float, offset) -> "ShallowNet":
        """Network computing scale * f((x - offset) / scale).

        This is the exact inverse-frame counterpart of the forward map
        x -> scale * x + offset used to reduce a box to the unit cube; the
        result keeps the Lipschitz constant of f and its width.
        """
        if not scale > 0:
            raise ValueError("scale must be positive")
        offset = np.atleast_1d(np.asarray(offset, float))
        if offset.shape != (self.d,):
            raise ValueError("offset must have one entry per input dimension")
        return ShallowNet(
            self.activation,
            scale * self.b,
            scale * self.a,
            self.W / scale,
            self.c - (self.W @ offset) / scale,
        )

    @classmethod
    def constant(cls, value: float, d: int, activation: str = "relu") -> "ShallowNet":
        return cls(activation, value, np.zeros(0), np.zeros((0, d)), np.zeros(0))

    def to_json_dict(self) -> dict:
        return {
            "activation": self.activation,
            "d": self.d,
            "m": self.width,
            "b": self.b,
            "a": [float(v) for v in self.a],
            "W": [[float(v) for v in row] for row in self.W],
            "c": [float(v) for v in self.c],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "ShallowNet":
        net = cls(
            data["activation"],
            data["b"],
            np.asarray(data["a"], float),
            np.asarray(data["W"], float).reshape(data["m"], data["d"]),
            np.asarray(data["c"], float),
        )
        if net.width != data["m"] or net.d != data["d"]:
            raise ValueError("declared width/dimension do not match the arrays")
        return net


def hat_net() -> ShallowNet:
    """The 1-D relu combination max(0,x) - 2 max(0,x+1) + max(0,x+2).

    It vanishes outside (-2, 0), rises with slope 1 to a peak of 1 at -1,
    and falls with slope -1; its exact Lipschitz constant is 1.
    """
    return ShallowNet(
        "relu",
        0.0,
        np.array([1.0, -2.0, 1.0]),
        np.array([[1.0], [1.0], [1.0]]),
        np.array([0.0, 1.0, 2.0]),
    )


def save_net_json(net: ShallowNet, path) -> None:
    with open(path, "w") as fh:
        json.dump(net.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_net_json(path) -> ShallowNet:
    with open(path) as fh:
        return ShallowNet.from_json_dict(json.load(fh))
