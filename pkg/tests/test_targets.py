"""Builtin experiment targets: shapes, constants, and seeding."""

import numpy as np
import pytest

from lipnets import TARGETS, builtin_target, empirical_lipschitz, target_names


def test_registry_contents():
    assert target_names() == sorted(
        ["abs-shift", "min2d", "sin-scaled", "zero", "randomized-mcshane"]
    )
    assert set(TARGETS) == set(target_names())


def test_unknown_target_message():
    with pytest.raises(KeyError, match="abs-shift"):
        builtin_target("no-such-target")


def test_pinned_values():
    x = np.array([[0.0], [0.5], [1.0]])
    assert np.allclose(builtin_target("abs-shift").make()(x), [0.5, 0.0, 0.5])
    assert np.allclose(builtin_target("sin-scaled").make()(x), [0.0, 1 / np.pi, 0.0])
    assert np.allclose(builtin_target("zero").make()(x), [0.0, 0.0, 0.0])
    xy = np.array([[0.2, 0.7], [0.9, 0.4]])
    assert np.allclose(builtin_target("min2d").make()(xy), [0.2, 0.4])


def test_declared_constants_hold_empirically():
    rng = np.random.default_rng(17)
    for name in target_names():
        spec = builtin_target(name)
        f = spec.make(0)
        emp = empirical_lipschitz(f, spec.domain, spec.norm, pairs=800, seed=3)
        assert emp <= spec.lipschitz_bound * (1 + 1e-6), name
        # Evaluable on arbitrary batches from the domain.
        pts = spec.domain.sample(rng, 13)
        assert np.asarray(f(pts)).shape == (13,)


def test_randomized_target_is_seeded():
    spec = builtin_target("randomized-mcshane")
    x = np.linspace(0, 1, 33)[:, None]
    same = spec.make(7)(x)
    again = spec.make(7)(x)
    other = spec.make(8)(x)
    assert np.array_equal(same, again)
    assert not np.array_equal(same, other)
    # Anchored at the lower corner.
    assert spec.make(7)(np.zeros((1, 1)))[0] == pytest.approx(0.0, abs=1e-12)
