"""Proximity operators for the sparse-recovery models."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass(frozen=True)
class BoxBounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=np.float64)
        upper = np.asarray(self.upper, dtype=np.float64)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("box bounds must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("box bounds must be finite")
        if np.any(lower > upper):
            raise ValueError("box lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def symmetric(cls, n, radius):
        r = np.full(n, float(radius))
        return cls(-r, r)

    def __len__(self):
        return self.lower.shape[0]

    def block(self, sl):
        return BoxBounds(self.lower[sl], self.upper[sl])

    def contains(self, x):
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


def prox_l1_box(v, alpha, box):
    """Minimize ``alpha*||z||_1 + 0.5*||z - v||^2`` over the box.

    Separable and 1-D convex per coordinate, so soft thresholding followed by
    clamping is exact.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    v = np.asarray(v, dtype=np.float64)
    return kernels.soft_clip(v, float(alpha), box.lower, box.upper)


def project_l2_ball(z):
    """Projection onto the Euclidean unit ball.

    This is also ``prox_{a g*}`` for ``g = ||.||_2`` and *every* ``a > 0``:
    the conjugate is an indicator, so the step size has no effect.
    """
    z = np.asarray(z, dtype=np.float64)
    nz = np.linalg.norm(z)
    if nz <= 1.0:
        return z.copy()
    return z / nz


def knorm(x, K):
    """Sum of the ``K`` largest absolute entries."""
    a = np.abs(np.asarray(x, dtype=np.float64))
    if K >= a.shape[0]:
        return float(a.sum())
    return float(np.sort(a)[::-1][:K].sum())


def prox_knorm(z, beta, K):
    """Prox of ``beta * ||.||_(K)`` at ``z``.

    The K-norm is the sorted-weighted l1 norm with weights
    ``(beta,)*K + (0,)*(n-K)``; its prox is computed with the stack-based
    pool-adjacent-violators pass on ``|z|`` sorted in decreasing order.
    Ties keep their original order (stable sort).
    """
    z = np.asarray(z, dtype=np.float64)
    n = z.shape[0]
    K = int(K)
    if not 1 <= K <= n:
        raise ValueError(f"K must lie in [1, {n}], got {K}")
    if beta <= 0:
        raise ValueError("beta must be positive")
    a = np.abs(z)
    order = np.argsort(-a, kind="stable")
    weights = np.zeros(n)
    weights[:K] = beta
    fitted = kernels.pava_sorted_l1(a[order], weights)
    out = np.empty(n)
    out[order] = fitted
    return np.sign(z) * out


def prox_conj_via_moreau(z, alpha, primal_prox):
    """``prox_{alpha g*}(z) = z - alpha * prox_{g/alpha}(z/alpha)``.

    ``primal_prox(v, s)`` must return ``prox_{s g}(v)``.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    z = np.asarray(z, dtype=np.float64)
    return z - alpha * primal_prox(z / alpha, 1.0 / alpha)


def brute_prox_oracle(z, alpha, objective, points=401):
    """Grid-search minimizer of ``objective(w) + ||w - z||^2 / (2 alpha)``.

    Test oracle only; dimension is capped at 3. The grid spans
    ``[min(z) - 2 alpha - 1, max(z) + 2 alpha + 1]`` on every axis with
    ``points`` nodes. ``objective`` receives an array of shape ``(k, d)``
    and returns ``k`` values (``inf`` allowed).

    When the full grid would exceed ``_FULL_GRID_LIMIT`` nodes (3-D), the
    search runs coarse-to-fine, shrinking a 41-node window around the
    incumbent until its spacing reaches that of the full grid. This is exact
    for the convex objectives it is used on.

    Returns ``(w, step)`` with ``step`` the full-grid spacing.
    """
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    d = z.shape[0]
    if d > 3:
        raise ValueError("brute_prox_oracle supports dimension <= 3")
    lo = z.min() - 2 * alpha - 1
    hi = z.max() + 2 * alpha + 1
    step = (hi - lo) / (points - 1)

    def best_on(axes):
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
        vals = np.asarray(objective(mesh), dtype=np.float64)
        vals = vals + np.sum((mesh - z) ** 2, axis=1) / (2 * alpha)
        return mesh[int(np.argmin(vals))].copy()

    if points**d <= _FULL_GRID_LIMIT:
        return best_on([np.linspace(lo, hi, points)] * d), step

    nodes = 41
    centre = np.full(d, 0.5 * (lo + hi))
    half = 0.5 * (hi - lo)
    while True:
        axes = [np.clip(np.linspace(c - half, c + half, nodes), lo, hi) for c in centre]
        centre = best_on(axes)
        spacing = 2 * half / (nodes - 1)
        if spacing <= step:
            return centre, step
        half = 2 * spacing


_FULL_GRID_LIMIT = 250_000
