"""Fit shallow networks to sampled values and gradients.

The fitter is a search, not an existence proof: frozen random features
(rows of W on the scaled dual-unit sphere, kinks placed uniformly over
the domain's image) are combined by a joint least-squares solve over the
output weights, then all parameters are refined by damped full-batch
gradient descent.  Non-convergence is reported, never raised.

Features are *nested* in the seed: row i is generated from its own
``default_rng([seed, i])`` stream, so a width-2m fit sees a superset of
the width-m features.  ``fit_c1`` additionally evaluates a halving
ladder of widths {m, m//2, ..., 1, 0} and keeps the best candidate,
which makes achieved (normalized) error monotone in the width budget.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .core import NormSpec, SampledFunction
from .network import ACTIVATIONS, ShallowNet

__all__ = ["FitTarget", "FitReport", "fit_c1", "fit_adaptive"]

# Candidates whose least-squares residual is worse than this multiple of
# tolerance are not worth refining (keeps the width ladder cheap).  The
# rule looks only at the candidate's own residual, so shared ladder
# entries behave identically across width budgets.
_REFINE_CUTOFF = 25.0


@dataclass(frozen=True)
class FitTarget:
    """Values and gradients on a lattice plus the two sup-norm tolerances."""

    samples: SampledFunction
    value_tol: float
    grad_tol: float
    norm: NormSpec

    def __post_init__(self) -> None:
        if self.samples.gradients is None:
            raise ValueError("fitting requires gradients at every lattice point")
        if not (self.value_tol > 0 and self.grad_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.norm.d != self.samples.domain.d:
            raise ValueError("norm dimension does not match the sample domain")


@dataclass(frozen=True)
class FitReport:
    net: ShallowNet
    achieved_value_err: float
    achieved_grad_err: float
    width_used: int
    converged: bool
    iterations: int

    def normalized_error(self, target: FitTarget) -> float:
        """Worst residual as a multiple of its tolerance."""
        return max(
            self.achieved_value_err / target.value_tol,
            self.achieved_grad_err / target.grad_tol,
        )

    def to_json_dict(self) -> dict:
        return {
            "net": self.net.to_json_dict(),
            "achieved_value_err": self.achieved_value_err,
            "achieved_grad_err": self.achieved_grad_err,
            "width_used": self.width_used,
            "converged": self.converged,
            "iterations": self.iterations,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"


def _dual_sphere_point(rng: np.random.Generator, norm: NormSpec) -> np.ndarray:
    """A point on the unit sphere of the *dual* exponent's plain lp norm."""
    d, q = norm.d, norm.dual_exponent
    if q == 2.0:
        g = rng.standard_normal(d)
        while (n := float(np.linalg.norm(g))) < 1e-12:
            g = rng.standard_normal(d)
        return g / n
    if q == math.inf:
        u = rng.uniform(-1.0, 1.0, size=d)
        axis = int(rng.integers(d))
        u[axis] = 1.0 if rng.random() < 0.5 else -1.0
        return u
    # q == 1: exponential sticks give a uniform simplex point, then signs.
    e = rng.exponential(1.0, size=d)
    signs = np.where(rng.random(d) < 0.5, -1.0, 1.0)
    return signs * e / e.sum()


def _canonical_sign(u: np.ndarray) -> np.ndarray:
    """Flip ``u`` so its first significant component is positive."""
    for value in u:
        if abs(value) > 1e-12:
            return u if value > 0 else -u
    return u


def _gradient_jump_pool(target: FitTarget):
    """Ridge directions suggested by the target's own gradient field.

    For a ridge function the gradient difference between two nearby points
    is parallel to the ridge direction, so gradient jumps between adjacent
    lattice points tell us where transition features pay off.  Each segment
    also carries a *snap anchor*: the point where a single slope change
    between the endpoints would have to sit to reconcile the two endpoint
    values with the two endpoint slopes.  For targets that really are
    piecewise linear this recovers kink positions exactly; for smooth
    targets it lands mid-transition.  Returns (start, end, direction, snap
    anchor, cumulative weight) arrays, or ``None`` when the gradient field
    is essentially constant.
    """
    samples = target.samples
    d = samples.domain.d
    res = samples.resolution
    grid_shape = (res,) * d
    points = samples.points().reshape(grid_shape + (d,))
    values = samples.values.reshape(grid_shape)
    grads = samples.gradients.reshape(grid_shape + (d,))
    starts, ends, dirs, snaps, weights = [], [], [], [], []
    for axis in range(d):
        take_lo = [slice(None)] * d
        take_hi = [slice(None)] * d
        take_lo[axis] = slice(None, -1)
        take_hi[axis] = slice(1, None)
        p_lo = points[tuple(take_lo)].reshape(-1, d)
        p_hi = points[tuple(take_hi)].reshape(-1, d)
        jump = (grads[tuple(take_hi)] - grads[tuple(take_lo)]).reshape(-1, d)
        v_lo = values[tuple(take_lo)].reshape(-1)
        v_hi = values[tuple(take_hi)].reshape(-1)
        s_lo = grads[tuple(take_lo)].reshape(-1, d)[:, axis]
        s_hi = grads[tuple(take_hi)].reshape(-1, d)[:, axis]
        h = p_hi[:, axis] - p_lo[:, axis]
        denom = h * (s_lo - s_hi)
        safe = np.abs(s_lo - s_hi) > 1e-9 * (np.abs(s_lo) + np.abs(s_hi) + 1.0)
        t = np.full(v_lo.shape, 0.5)
        np.divide(v_hi - v_lo - s_hi * h, denom, out=t, where=safe)
        t = np.clip(t, 0.0, 1.0)
        starts.append(p_lo)
        ends.append(p_hi)
        dirs.append(jump)
        snaps.append(p_lo + t[:, None] * (p_hi - p_lo))
        weights.append(np.linalg.norm(jump, axis=1))
    starts = np.concatenate(starts)
    ends = np.concatenate(ends)
    dirs = np.concatenate(dirs)
    snaps = np.concatenate(snaps)
    weights = np.concatenate(weights)
    keep = weights > max(1e-12, 1e-8 * float(weights.max(initial=0.0)))
    if not keep.any():
        return None
    starts, ends, dirs = starts[keep], ends[keep], dirs[keep]
    snaps, weights = snaps[keep], weights[keep]
    dirs = np.array([_canonical_sign(u / n) for u, n in zip(dirs, weights)])
    return starts, ends, dirs, snaps, np.cumsum(weights)


def _plain_lq_norm(u: np.ndarray, q: float) -> float:
    if q == math.inf:
        return float(np.abs(u).max())
    if q == 1.0:
        return float(np.abs(u).sum())
    return float(np.linalg.norm(u))


def _frozen_features(target: FitTarget, width: int, seed: int,
                     act_name: str = "relu"):
    """Rows of (W, c); row i depends only on (seed, i), never on width.

    Three kinds of rows.  For the piecewise-linear activation, rows 1..d
    are axis units kept strictly active over the whole box: every kink
    line leaves a gradient jump across it, so without exactly-affine
    columns the basis cannot even reproduce a linear map.  All other rows
    take directions either importance-sampled from the target's own
    gradient jumps (which concentrates transition features where the
    target actually bends) or drawn uniformly from the dual-exponent
    sphere for coverage.  Even-indexed adaptive rows use the segment's
    snap anchor and the exact jump direction, so a target that *is* a
    single unit is reproduced exactly by row 0; odd-indexed ones jitter
    both, and fall back to the uniform draw on a coin flip.
    """
    box = target.samples.domain
    d = box.d
    q = target.norm.dual_exponent
    pool = _gradient_jump_pool(target)
    W = np.empty((width, d))
    c = np.empty(width)
    affine = set()
    if act_name == "relu":
        affine = set(range(1, min(d, width - 1) + 1)) if width > 1 else set()
    for i in range(width):
        if i in affine:
            w = np.zeros(d)
            w[i - 1] = float(d)
            z_lo = float(np.minimum(w * box.lower, w * box.upper).sum())
            z_hi = float(np.maximum(w * box.lower, w * box.upper).sum())
            W[i] = w
            c[i] = -z_lo + 0.5 * (z_hi - z_lo)
            continue
        rng = np.random.default_rng([seed, i])
        snap = i % 2 == 0
        adaptive = pool is not None and (snap or rng.random() < 0.5)
        w = None
        if adaptive:
            starts, ends, dirs, snaps, cum = pool
            j = int(np.searchsorted(cum, rng.uniform(0.0, cum[-1])))
            j = min(j, len(dirs) - 1)
            u = dirs[j] if snap else dirs[j] + 0.02 * rng.standard_normal(d)
            scale = _plain_lq_norm(u, q)
            if scale > 1e-12:
                w = d * _canonical_sign(u / scale)
                if snap:
                    anchor = snaps[j]
                else:
                    anchor = starts[j] + rng.uniform(0.0, 1.0) * (ends[j] - starts[j])
                W[i] = w
                c[i] = -float(w @ anchor)
        if w is None:
            w = d * _dual_sphere_point(rng, target.norm)
            z_lo = float(np.minimum(w * box.lower, w * box.upper).sum())
            z_hi = float(np.maximum(w * box.lower, w * box.upper).sum())
            W[i] = w
            c[i] = -rng.uniform(z_lo, z_hi)
    return W, c


def _sup_errors(act, b, a, W, c, X, v, g):
    z = X @ W.T + c
    pz = act.derivative(z)
    value_err = float(np.abs(act.value(z) @ a + b - v).max())
    grad_err = float(np.abs((pz * a) @ W - g).max()) if W.size else float(np.abs(g).max())
    return value_err, grad_err


# Spectrum truncation levels tried by the output solve, loosest last.
_RCOND_GRID = (1e-9, 1e-6, 1e-5, 3e-5, 1e-4, 3e-4, 1e-3)


def _solve_output_layer(act, W, c, X, v, g, grad_weight, vtol, gtol):
    """Least squares over (b, a) with W, c frozen; rows = values + gradients.

    A single SVD yields the solution at every truncation level in
    ``_RCOND_GRID``; among the levels whose sup-norm score is essentially
    as good as the best one, the smallest output weights win.  Without the
    truncation, two nearly identical features admit huge cancelling
    coefficients that spike the derivative between sample points while
    improving the sampled residual by almost nothing.
    """
    n, d = X.shape
    m = W.shape[0]
    z = X @ W.T + c
    design = np.empty((n * (1 + d), m + 1))
    rhs = np.empty(n * (1 + d))
    design[:n, 0] = 1.0
    design[:n, 1:] = act.value(z)
    rhs[:n] = v
    root = math.sqrt(grad_weight)
    pz = act.derivative(z)
    for k in range(d):
        block = slice(n * (1 + k), n * (2 + k))
        design[block, 0] = 0.0
        design[block, 1:] = root * pz * W[:, k]
        rhs[block] = root * g[:, k]
    U, s, Vt = np.linalg.svd(design, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        return 0.0, np.zeros(m)
    projected = U.T @ rhs
    row_scale = np.linalg.norm(W, axis=1)
    candidates = []
    for rcond in _RCOND_GRID:
        keep = s > rcond * s[0]
        coeff = Vt[keep].T @ (projected[keep] / s[keep])
        b, a = float(coeff[0]), coeff[1:]
        ve, ge = _sup_errors(act, b, a, W, c, X, v, g)
        score = max(ve / vtol, ge / gtol)
        weight = float(np.abs(a) @ row_scale)
        candidates.append((score, weight, b, a))
    best_score = min(score for score, *_ in candidates)
    limit = best_score * 1.05 + 1e-12
    if best_score <= 1.0:
        limit = min(limit, 1.0 + 1e-12)
    chosen = None
    for score, weight, b, a in candidates:
        if score <= limit and (chosen is None or weight < chosen[0]):
            chosen = (weight, b, a)
    return chosen[1], chosen[2]


def _loss_only(act, b, a, W, c, X, v, g, grad_weight):
    n = X.shape[0]
    z = X @ W.T + c
    rv = act.value(z) @ a + b - v
    rg = (act.derivative(z) * a) @ W - g
    return float(rv @ rv) / n + grad_weight * float((rg * rg).sum()) / n


def _loss_and_grads(act, b, a, W, c, X, v, g, grad_weight):
    n = X.shape[0]
    z = X @ W.T + c
    phi = act.value(z)
    pz = act.derivative(z)
    ppz = act.second_derivative(z)
    rv = phi @ a + b - v
    rg = (pz * a) @ W - g
    loss = float(rv @ rv) / n + grad_weight * float((rg * rg).sum()) / n

    rgW = rg @ W.T  # (n, m): sum_k rg[n,k] W[i,k]
    gb = 2.0 * rv.sum() / n
    ga = 2.0 * (phi.T @ rv) / n + 2.0 * grad_weight * (pz * rgW).sum(axis=0) / n
    gc = 2.0 * (pz.T @ rv) * a / n + 2.0 * grad_weight * a * (ppz * rgW).sum(axis=0) / n
    gW = (
        2.0 * ((rv[:, None] * pz).T @ X) * a[:, None] / n
        + 2.0 * grad_weight * a[:, None] * ((ppz * rgW).T @ X) / n
        + 2.0 * grad_weight * a[:, None] * (pz.T @ rg) / n
    )
    return loss, gb, ga, gW, gc


def _refine(act, b, a, W, c, X, v, g, grad_weight, iters, vtol, gtol):
    """Damped gradient descent on all parameters, tracking the best sup score."""
    best = (b, a, W, c)
    ve, ge = _sup_errors(act, b, a, W, c, X, v, g)
    best_score = max(ve / vtol, ge / gtol)
    loss, gb, ga, gW, gc = _loss_and_grads(act, b, a, W, c, X, v, g, grad_weight)
    lr = 1e-2
    steps = 0
    for _ in range(iters):
        steps += 1
        nb, na, nW, nc = b - lr * gb, a - lr * ga, W - lr * gW, c - lr * gc
        new_loss = _loss_only(act, nb, na, nW, nc, X, v, g, grad_weight)
        if new_loss < loss and np.isfinite(new_loss):
            b, a, W, c = nb, na, nW, nc
            loss, gb, ga, gW, gc = _loss_and_grads(act, b, a, W, c, X, v, g, grad_weight)
            lr *= 1.25
            ve, ge = _sup_errors(act, b, a, W, c, X, v, g)
            score = max(ve / vtol, ge / gtol)
            if score < best_score:
                best, best_score = (b, a, W, c), score
        else:
            lr *= 0.5
            if lr < 1e-14:
                break
    return best, steps


def _evaluate_width(target: FitTarget, act_name: str, width: int, seed: int,
                    refine_iters: int, grad_weight: float,
                    X, v, g, features) -> FitReport:
    act = ACTIVATIONS[act_name]
    d = X.shape[1]
    vtol, gtol = target.value_tol, target.grad_tol
    if width == 0:
        b = (float(v.max()) + float(v.min())) / 2.0
        ve = (float(v.max()) - float(v.min())) / 2.0
        ge = float(np.abs(g).max())
        return FitReport(
            net=ShallowNet.constant(b, d, activation=act_name),
            achieved_value_err=ve,
            achieved_grad_err=ge,
            width_used=0,
            converged=ve <= vtol and ge <= gtol,
            iterations=0,
        )
    W, c = features[0][:width].copy(), features[1][:width].copy()
    b, a = _solve_output_layer(act, W, c, X, v, g, grad_weight, vtol, gtol)
    ve, ge = _sup_errors(act, b, a, W, c, X, v, g)
    score = max(ve / vtol, ge / gtol)
    steps = 0
    if score > 1.0 and score <= _REFINE_CUTOFF and refine_iters > 0:
        (b, a, W, c), steps = _refine(
            act, b, a, W, c, X, v, g, grad_weight, refine_iters, vtol, gtol
        )
        # Re-solving the linear layer for the refined features is exact;
        # prefer it whenever it scores at least as well.
        b2, a2 = _solve_output_layer(act, W, c, X, v, g, grad_weight, vtol, gtol)
        ve, ge = _sup_errors(act, b, a, W, c, X, v, g)
        ve2, ge2 = _sup_errors(act, b2, a2, W, c, X, v, g)
        if max(ve2 / vtol, ge2 / gtol) <= max(ve / vtol, ge / gtol):
            b, a, ve, ge = b2, a2, ve2, ge2
    net = ShallowNet(activation=act_name, b=b, a=a, W=W, c=c)
    return FitReport(
        net=net,
        achieved_value_err=ve,
        achieved_grad_err=ge,
        width_used=width,
        converged=ve <= vtol and ge <= gtol,
        iterations=steps,
    )


def _width_ladder(width: int) -> list[int]:
    out = []
    w = width
    while w > 0:
        out.append(w)
        w //= 2
    out.append(0)
    return out[::-1]


def fit_c1(
    target: FitTarget,
    width: int,
    activation: str = "relu",
    seed: int = 0,
    refine_iters: int = 150,
    grad_weight: float = 1.0,
) -> FitReport:
    """Best network of width at most ``width`` matching values and gradients.

    Deterministic in ``seed``.  Residuals are measured in sup norm on the
    target lattice (values, and gradients entrywise); ``converged`` means
    both residuals are within tolerance.  Candidates of width
    {0, 1, ..., width//2, width} share features, and the report keeps the
    candidate with the smallest normalized residual, smallest width first.
    """
    if width < 1:
        raise ValueError("width must be at least 1")
    if activation not in ACTIVATIONS:
        raise ValueError(f"unknown activation {activation!r}")
    X = target.samples.points()
    v = target.samples.values
    g = target.samples.gradients
    features = _frozen_features(target, width, seed, activation)
    best: FitReport | None = None
    best_score = math.inf
    for w in _width_ladder(width):
        cand = _evaluate_width(
            target, activation, w, seed, refine_iters, grad_weight, X, v, g, features
        )
        score = cand.normalized_error(target)
        if score < best_score:
            best, best_score = cand, score
    assert best is not None
    return best


def fit_adaptive(
    target: FitTarget,
    max_width: int,
    activation: str = "relu",
    seed: int = 0,
    refine_iters: int = 150,
    grad_weight: float = 1.0,
) -> FitReport:
    """Double the width budget 1, 2, 4, ... until convergence or ``max_width``.

    Returns the first converged report, else the best attempt seen.
    """
    if max_width < 1:
        raise ValueError("max_width must be at least 1")
    widths = []
    w = 1
    while w < max_width:
        widths.append(w)
        w *= 2
    widths.append(max_width)
    best: FitReport | None = None
    for w in widths:
        report = fit_c1(
            target, w, activation, seed,
            refine_iters=refine_iters, grad_weight=grad_weight,
        )
        if report.converged:
            return report
        if best is None or report.normalized_error(target) < best.normalized_error(target):
            best = report
    assert best is not None
    return best
