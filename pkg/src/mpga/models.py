"""Concrete terms for the L1/L2 and L1/SK sparse-recovery models."""
from __future__ import annotations

import numpy as np

from . import kernels
from .problem import (
    BlockPartition,
    DenominatorConjugate,
    FractionalProblem,
    SeparableTerm,
    SmoothTerm,
)
from .prox import BoxBounds, knorm, project_l2_ball, prox_conj_via_moreau, prox_knorm

# Slack for deciding membership in the dual-norm ball (rounding in prox outputs).
DUAL_BALL_TOL = 1e-9


class L1Box(SeparableTerm):
    """``f_i = ||x_i||_1 + indicator(lower_i <= x_i <= upper_i)``."""

    def __init__(self, box):
        self.box = box

    def block_value(self, sl, xi):
        return float(kernels.l1_box_value(xi, self.box.lower[sl], self.box.upper[sl]))

    def block_prox(self, sl, v, alpha):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        return kernels.soft_clip(np.asarray(v, dtype=np.float64), float(alpha),
                                 self.box.lower[sl], self.box.upper[sl])


class _Cache:
    __slots__ = ("x", "r", "sq")

    def __init__(self, x, r, sq=0.0):
        self.x = x
        self.r = r
        self.sq = sq


class LeastSquares(SmoothTerm):
    """``h(x) = lam/2 * ||Ax - b||^2``.

    The solver cache keeps the residual ``Ax - b`` and updates it by the
    columns of the block that moved.
    """

    def __init__(self, A, b, lam):
        self.A = np.asfortranarray(A, dtype=np.float64)
        self.b = np.asarray(b, dtype=np.float64)
        self.lam = float(lam)

    def value(self, x):
        r = self.A @ x - self.b
        return 0.5 * self.lam * float(r @ r)

    def grad(self, x):
        return self.lam * (self.A.T @ (self.A @ x - self.b))

    def partial_grad(self, x, sl):
        return self.lam * (self.A[:, sl].T @ (self.A @ x - self.b))

    def cache(self, x):
        x = np.array(x, dtype=np.float64)
        return _Cache(x, self.A @ x - self.b)

    def cached_value(self, c):
        return 0.5 * self.lam * float(c.r @ c.r)

    def cached_partial_grad(self, c, sl):
        return self.lam * (self.A[:, sl].T @ c.r)

    def cached_update(self, c, sl, new_block):
        x = c.x.copy()
        delta = new_block - x[sl]
        x[sl] = new_block
        return _Cache(x, c.r + self.A[:, sl] @ delta)

    def cached_curvature(self, old, new, sl, step):
        dr = new.r - old.r
        return self.lam * float(dr @ dr)


class ScaledLeastSquares(SmoothTerm):
    """``h(x) = lam/2 * ||x||_2 * ||Ax - b||^2`` (the L1/L2 numerator).

    Differentiable away from ``x = 0``:
    ``grad h = lam/2 * ||Ax-b||^2 * x/||x|| + lam*||x|| * A^T(Ax-b)``.
    """

    def __init__(self, A, b, lam):
        self.A = np.asfortranarray(A, dtype=np.float64)
        self.b = np.asarray(b, dtype=np.float64)
        self.lam = float(lam)

    def value(self, x):
        r = self.A @ x - self.b
        return 0.5 * self.lam * float(np.linalg.norm(x)) * float(r @ r)

    def _grad_parts(self, xs, r, nx, AtR):
        if nx == 0.0:
            raise ValueError("grad h is undefined at x = 0")
        return 0.5 * self.lam * float(r @ r) * xs / nx + self.lam * nx * AtR

    def grad(self, x):
        r = self.A @ x - self.b
        return self._grad_parts(x, r, float(np.linalg.norm(x)), self.A.T @ r)

    def partial_grad(self, x, sl):
        r = self.A @ x - self.b
        return self._grad_parts(x[sl], r, float(np.linalg.norm(x)), self.A[:, sl].T @ r)

    def cache(self, x):
        x = np.array(x, dtype=np.float64)
        return _Cache(x, self.A @ x - self.b, float(x @ x))

    def cached_value(self, c):
        return 0.5 * self.lam * np.sqrt(c.sq) * float(c.r @ c.r)

    def cached_partial_grad(self, c, sl):
        return self._grad_parts(c.x[sl], c.r, np.sqrt(c.sq), self.A[:, sl].T @ c.r)

    def cached_update(self, c, sl, new_block):
        x = c.x.copy()
        old = x[sl]
        delta = new_block - old
        sq = c.sq - float(old @ old) + float(new_block @ new_block)
        x[sl] = new_block
        return _Cache(x, c.r + self.A[:, sl] @ delta, max(sq, 0.0))


class L2Norm(DenominatorConjugate):
    """``g = ||.||_2``; ``g*`` is the indicator of the unit ball."""

    def value(self, x):
        return float(np.linalg.norm(x))

    def conj_value(self, y):
        return 0.0 if np.linalg.norm(y) <= 1.0 + DUAL_BALL_TOL else np.inf

    def prox_conj(self, z, alpha):
        return project_l2_ball(z)

    def subgradient(self, x):
        return np.asarray(x, dtype=np.float64) / np.linalg.norm(x)

    def dist_conj_subdiff(self, x, y, band=1e-12):
        """Distance from ``x`` to the normal cone of the unit ball at ``y``."""
        ny = float(np.linalg.norm(y))
        if ny > 1.0 + band:
            raise ValueError("y lies outside the unit ball")
        if ny < 1.0 - band:
            return float(np.linalg.norm(x))
        t = float(x @ y) / (ny * ny)
        if t <= 0.0:
            return float(np.linalg.norm(x))
        return float(np.linalg.norm(x - t * y))


class KNorm(DenominatorConjugate):
    """``g = ||.||_(K)``; ``g*`` is the indicator of
    ``{y : ||y||_inf <= 1, ||y||_1 <= K}``."""

    def __init__(self, K):
        self.K = int(K)
        if self.K < 1:
            raise ValueError("K must be a positive integer")

    def value(self, x):
        return knorm(x, self.K)

    def conj_value(self, y):
        a = np.abs(y)
        if a.max(initial=0.0) <= 1.0 + DUAL_BALL_TOL and a.sum() <= self.K * (1.0 + DUAL_BALL_TOL):
            return 0.0
        return np.inf

    def prox_conj(self, z, alpha):
        return prox_conj_via_moreau(z, alpha, lambda v, s: prox_knorm(v, s, self.K))

    def subgradient(self, x):
        """Signs of the ``K`` largest magnitudes; ties go to the lowest index."""
        x = np.asarray(x, dtype=np.float64)
        top = np.argsort(-np.abs(x), kind="stable")[: self.K]
        y = np.zeros_like(x)
        y[top] = np.sign(x[top])
        return y


def l1sk_problem(A, b, lam, K, box, N=1):
    """``(||x||_1 + lam/2 ||Ax-b||^2) / ||x||_(K)`` over the box."""
    n = A.shape[1]
    return FractionalProblem(BlockPartition.even(n, N), L1Box(box), LeastSquares(A, b, lam), KNorm(K))


def l1l2_problem(A, b, lam, box, N=1):
    """``||x||_1/||x||_2 + lam/2 ||Ax-b||^2`` over the box, as a ratio with
    ``h = lam/2 ||x||_2 ||Ax-b||^2``."""
    n = A.shape[1]
    return FractionalProblem(BlockPartition.even(n, N), L1Box(box), ScaledLeastSquares(A, b, lam), L2Norm())


__all__ = [
    "BoxBounds",
    "DUAL_BALL_TOL",
    "KNorm",
    "L1Box",
    "L2Norm",
    "LeastSquares",
    "ScaledLeastSquares",
    "l1l2_problem",
    "l1sk_problem",
]
