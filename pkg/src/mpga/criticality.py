"""Termination certificates."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .problem import eval_eta, eval_zeta

# Coordinates within this distance of a box bound count as binding.
BOUND_BAND = 1e-12


def fixed_point_residual(problem, x, y, alpha0, alpha_blocks):
    """Fixed-point residual of the prox characterization of criticality.

    ``||y - prox_{a0 g*}(y + a0 x)|| + sum_i ||x_i - prox_{a_i f_i}(x_i - a_i grad_i h(x) + a_i Q y_i)||``.
    Zero means ``x`` is critical for ``F`` with ``y`` in ``dg(x)``.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    z = eval_zeta(problem, x)
    e = eval_eta(problem, x, y)
    if not e.is_finite or e.value <= 0.0:
        raise ValueError("eta(x, y) <= 0: (x, y) is outside dom(Q)")
    if not z.is_finite:
        raise ValueError("x is outside dom(f)")
    q = z.value / e.value
    slices = problem.partition.slices
    alphas = np.broadcast_to(np.asarray(alpha_blocks, dtype=np.float64), (len(slices),))
    res = float(np.linalg.norm(y - problem.gconj.prox_conj(y + alpha0 * x, alpha0)))
    grad = problem.h.grad(x)
    for sl, a in zip(slices, alphas):
        v = x[sl] - a * grad[sl] + a * q * y[sl]
        res += float(np.linalg.norm(x[sl] - problem.f.block_prox(sl, v, a)))
    return res


def dist_subdiff_Q_l1l2(x, y, A, b, lam, box):
    """``dist(0, dQ(x, y))`` for the L1/L2 model in closed form.

    The first part measures ``Q y - grad h(x)`` against the interval-valued
    subdifferential of ``|.| + box`` coordinatewise; the second measures
    ``x`` against the normal cone of the unit ball at ``y``.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    ny = float(np.linalg.norm(y))
    if ny > 1.0 + BOUND_BAND:
        raise ValueError("||y||_2 > 1: y is outside dom(g*)")
    r = A @ x - b
    nx = float(np.linalg.norm(x))
    if np.any(x < box.lower) or np.any(x > box.upper):
        raise ValueError("x violates the box")
    zeta = float(np.abs(x).sum()) + 0.5 * lam * nx * float(r @ r)
    if zeta == 0.0:
        return 0.0
    eta = float(x @ y)
    if eta <= 0.0:
        raise ValueError("eta(x, y) <= 0: (x, y) is outside dom(Q)")
    q = zeta / eta
    grad = 0.5 * lam * float(r @ r) * x / nx + lam * nx * (A.T @ r)
    first = kernels.l1_box_gap(q * y - grad, x, box.lower, box.upper, BOUND_BAND)
    if ny < 1.0 - BOUND_BAND:
        second = nx
    else:
        t = eta / (ny * ny)
        second = float(np.linalg.norm(x - t * y)) if t > 0.0 else nx
    return float(np.sqrt(first + (q * second) ** 2) / eta)


def rel_err(x, x_ref):
    nref = float(np.linalg.norm(x_ref))
    if nref == 0.0:
        raise ValueError("reference vector is zero")
    return float(np.linalg.norm(np.asarray(x) - np.asarray(x_ref))) / nref


@dataclass(frozen=True)
class StoppingRule:
    """When to stop; checked once per epoch.

    ``kind`` is ``"relerr"`` (needs ``target``), ``"residual"`` (the L1/L2
    subdifferential distance scaled by ``||(x, y)||``) or ``"fixedpoint"``.
    """

    kind: str
    tol: float
    target: Optional[np.ndarray] = None
    alpha0: float = 1.0
    alpha_blocks: float = 1.0

    def __post_init__(self):
        if self.kind not in ("relerr", "residual", "fixedpoint"):
            raise ValueError(f"unknown stopping rule {self.kind!r}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.kind == "relerr" and self.target is None:
            raise ValueError("relerr rule needs a target")

    @classmethod
    def relerr(cls, target, tol=1e-3):
        return cls("relerr", tol, target=np.asarray(target, dtype=np.float64))

    @classmethod
    def subdiff(cls, tol=1e-7):
        return cls("residual", tol)

    @classmethod
    def fixed_point(cls, tol, alpha0=1.0, alpha_blocks=1.0):
        return cls("fixedpoint", tol, alpha0=alpha0, alpha_blocks=alpha_blocks)

    def measure(self, problem, x, y):
        if self.kind == "relerr":
            return rel_err(x, self.target)
        if self.kind == "fixedpoint":
            return fixed_point_residual(problem, x, y, self.alpha0, self.alpha_blocks)
        h, f = problem.h, problem.f
        d = dist_subdiff_Q_l1l2(x, y, h.A, h.b, h.lam, f.box)
        return d / float(np.sqrt(x @ x + y @ y))
