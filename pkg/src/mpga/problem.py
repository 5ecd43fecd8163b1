"""Fractional programs ``min (f(x) + h(x)) / g(x)`` and their primal-dual form.

``f`` is block separable, ``h`` is smooth and ``g`` is a non-negative convex
function entering only through its conjugate ``g*``. The evaluators below
return :class:`~mpga.extended.ExtReal` values so that leaving the domain is
explicit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .extended import NEG_INF, POS_INF, ExtReal


@dataclass(frozen=True)
class BlockPartition:
    """Consecutive blocks of sizes ``n_1, ..., n_N``."""

    sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if not sizes or any(s < 1 for s in sizes):
            raise ValueError("block sizes must be a nonempty list of positive integers")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "offsets", tuple(int(o) for o in np.cumsum((0,) + sizes[:-1])))
        object.__setattr__(self, "slices", tuple(slice(o, o + s) for o, s in zip(self.offsets, sizes)))

    @classmethod
    def even(cls, n, N):
        """``N`` blocks whose sizes differ by at most one (larger blocks first)."""
        if not 1 <= N <= n:
            raise ValueError(f"need 1 <= N <= n, got N={N}, n={n}")
        base, extra = divmod(n, N)
        return cls(tuple(base + 1 if i < extra else base for i in range(N)))

    @property
    def N(self):
        return len(self.sizes)

    @property
    def n(self):
        return self.offsets[-1] + self.sizes[-1]


class SeparableTerm:
    """``f(x) = sum_i f_i(x_i)``; subclasses provide the per-block oracles.

    ``block_value`` returns ``inf`` outside the block's domain.
    """

    def block_value(self, sl, xi):
        raise NotImplementedError

    def block_prox(self, sl, v, alpha):
        raise NotImplementedError

    def in_domain(self, sl, xi):
        return bool(np.isfinite(self.block_value(sl, xi)))


class SmoothTerm:
    """Smooth part ``h`` with a cache protocol used by the solver.

    The default cache is the point itself and every cached call falls back
    to the plain oracles; models with cheap incremental updates override
    the ``cached_*`` methods.
    """

    def value(self, x):
        raise NotImplementedError

    def grad(self, x):
        raise NotImplementedError

    def partial_grad(self, x, sl):
        return self.grad(x)[sl]

    def cache(self, x):
        return np.array(x, dtype=np.float64)

    def cached_value(self, cache):
        return self.value(cache)

    def cached_partial_grad(self, cache, sl):
        return self.partial_grad(cache, sl)

    def cached_update(self, cache, sl, new_block):
        """Cache for the point whose block ``sl`` is replaced by ``new_block``."""
        out = cache.copy()
        out[sl] = new_block
        return out

    def cached_curvature(self, old, new, sl, step):
        """``<x_new - x_old, grad h(x_new) - grad h(x_old)>`` for a step on one block."""
        return float(step @ (self.cached_partial_grad(new, sl) - self.cached_partial_grad(old, sl)))


class DenominatorConjugate:
    """The denominator ``g`` seen through ``g*``.

    ``conj_value`` returns 0 or ``inf`` for the norm denominators used here
    but any float is allowed.
    """

    def value(self, x):
        raise NotImplementedError

    def conj_value(self, y):
        raise NotImplementedError

    def prox_conj(self, z, alpha):
        raise NotImplementedError

    def subgradient(self, x):
        raise NotImplementedError

    def dist_conj_subdiff(self, x, y):
        raise NotImplementedError


@dataclass(frozen=True)
class FractionalProblem:
    partition: BlockPartition
    f: SeparableTerm
    h: SmoothTerm
    gconj: DenominatorConjugate

    @property
    def n(self):
        return self.partition.n

    def with_partition(self, partition):
        if partition.n != self.n:
            raise ValueError("partition dimension mismatch")
        return FractionalProblem(partition, self.f, self.h, self.gconj)

    def f_value(self, x):
        """Block-ordered left-to-right sum of ``f_i(x_i)`` (may be ``inf``)."""
        total = 0.0
        for sl in self.partition.slices:
            total += float(self.f.block_value(sl, x[sl]))
        return total

    def _check(self, v):
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.n,):
            raise ValueError(f"expected a vector of length {self.n}, got shape {v.shape}")
        return v


def eval_zeta(problem, x):
    x = problem._check(x)
    fx = problem.f_value(x)
    if not np.isfinite(fx):
        return POS_INF
    return ExtReal.finite(fx + problem.h.value(x))


def eval_eta(problem, x, y):
    x = problem._check(x)
    y = problem._check(y)
    gs = problem.gconj.conj_value(y)
    if not np.isfinite(gs):
        return NEG_INF
    return ExtReal.finite(float(x @ y) - gs)


def eval_Q(problem, x, y):
    z = eval_zeta(problem, x)
    if not z.is_finite:
        return POS_INF
    e = eval_eta(problem, x, y)
    if not e.is_finite or e.value <= 0.0:
        return POS_INF
    return ExtReal.finite(z.value / e.value)


def eval_F(problem, x):
    x = problem._check(x)
    z = eval_zeta(problem, x)
    if not z.is_finite:
        return POS_INF
    gx = problem.gconj.value(x)
    if gx <= 0.0:
        return POS_INF
    return ExtReal.finite(z.value / gx)


def initial_dual(problem, x):
    """An element of ``dg(x)``; raises when ``g(x) == 0``."""
    x = problem._check(x)
    if problem.gconj.value(x) <= 0.0:
        raise ValueError("g(x) = 0: x lies outside the domain of F")
    return problem.gconj.subgradient(x)
