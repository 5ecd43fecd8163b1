"""Multi-proximity gradient iterations with a nonmonotone line search.

One iteration updates either the dual variable ``y`` (index 0) through the
prox of ``g*`` or one primal block ``x_i`` (index ``1..N``) through a
prox-gradient step accepted against the largest of the last ``M + 1``
objective values.
"""
from __future__ import annotations

import enum
import logging
import time
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .criticality import StoppingRule
from .problem import eval_F, initial_dual

log = logging.getLogger(__name__)

MAX_BACKTRACKS = 10_000
BB_CURVATURE_EPS = 1e-12


class LineSearchError(RuntimeError):
    """Backtracking hit the hard cap, which points to a broken oracle."""


class Termination(str, enum.Enum):
    RESIDUAL = "ResidualMet"
    RELERR = "RelErrMet"
    MAX_EPOCHS = "MaxEpochs"


@dataclass(frozen=True)
class Schedule:
    """Block selection rule: ``cyclic`` or ``randomized``.

    For ``randomized``, ``probs`` has ``N + 1`` entries (index 0 is the dual
    block); ``None`` means uniform.
    """

    kind: str = "cyclic"
    probs: Optional[tuple] = None
    p_min: float = 0.0

    def __post_init__(self):
        if self.kind not in ("cyclic", "randomized"):
            raise ValueError(f"unknown schedule {self.kind!r}")
        if self.probs is not None:
            p = np.asarray(self.probs, dtype=np.float64)
            if abs(p.sum() - 1.0) > 1e-12 or p.min() <= 0 or p.min() < self.p_min:
                raise ValueError("probabilities must be positive, >= p_min and sum to 1")

    @classmethod
    def cyclic(cls):
        return cls("cyclic")

    @classmethod
    def randomized(cls, probs=None, p_min=0.0):
        return cls("randomized", None if probs is None else tuple(probs), p_min)


@dataclass(frozen=True)
class SolverConfig:
    M: int = 2
    sigma: float = 1e-6
    gamma: float = 0.5
    alpha_lo: float = 1e-8
    alpha_hi: float = 1e8
    alpha_y: float = 1000.0
    schedule: Schedule = field(default_factory=Schedule.cyclic)
    seed: int = 0
    max_epochs: int = 5000
    stop_rule: Optional[StoppingRule] = None
    bb_floor: float = 1e-8
    bb_init: float = 1.0

    def __post_init__(self):
        if self.M < 0 or int(self.M) != self.M:
            raise ValueError("M must be a nonnegative integer")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if not 0 < self.alpha_lo <= self.alpha_hi:
            raise ValueError("need 0 < alpha_lo <= alpha_hi")
        if not self.alpha_lo <= self.alpha_y <= self.alpha_hi:
            raise ValueError("alpha_y must lie in [alpha_lo, alpha_hi]")
        if not 0 < self.bb_floor <= self.alpha_hi or not self.bb_init > 0:
            raise ValueError("need 0 < bb_floor <= alpha_hi and bb_init > 0")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be nonnegative")


@dataclass
class IterateState:
    x: np.ndarray
    y: np.ndarray
    q_window: deque
    t: int = 0
    last_move: Optional[tuple] = None  # (slice, dx, cache before, cache after)
    alpha_prev: float = 1.0


@dataclass
class SolveReport:
    iterations: int
    epochs: int
    q_trace: list  # (t, Q_t, Q_ref)
    step_trace: list  # (t, block, alpha, backtracks)
    move_trace: list  # ||dx||^2 + Q_ref ||dy||^2 per iteration
    stop_trace: list  # (epoch, stop measure)
    termination: Termination
    wall_time: float
    final_x: np.ndarray
    final_y: np.ndarray
    F0: float
    dual_kept: int = 0

    @property
    def final_objective(self):
        return self.q_trace[-1][1] if self.q_trace else self.F0

    @property
    def final_measure(self):
        return self.stop_trace[-1][1] if self.stop_trace else float("nan")


def nonmonotone_reference(q_window, t, M):
    """Return ``(Q_ref, l)``: the window maximum and the latest index attaining it.

    ``q_window`` holds ``Q_s`` for ``s = max(t - M, 0), ..., t``.
    """
    vals = list(q_window)[-(M + 1):]
    first = t - len(vals) + 1
    best = max(vals)
    last = max(j for j, v in enumerate(vals) if v == best)
    return best, first + last


def step_y(problem, x, y, alpha):
    """Dual step ``prox_{alpha g*}(y + alpha x)``."""
    return problem.gconj.prox_conj(y + alpha * x, alpha)


def step_x_block(problem, x, y, i, alpha, q_value, grad_i=None):
    """Prox-gradient candidate for primal block ``i`` (1-based)."""
    sl = problem.partition.slices[i - 1]
    if grad_i is None:
        grad_i = problem.h.partial_grad(x, sl)
    v = x[sl] - alpha * grad_i + alpha * q_value * y[sl]
    return problem.f.block_prox(sl, v, alpha)


class _Accepted(NamedTuple):
    x: np.ndarray
    alpha: float
    backtracks: int
    cache: object
    zeta: float
    eta: float


def _line_search(problem, x, y, gs, cache, i, grad_i, alpha, sigma, gamma, q_value, q_ref, fresh=False):
    sl = problem.partition.slices[i - 1]
    h = problem.h
    for bt in range(MAX_BACKTRACKS + 1):
        if not alpha > 0.0:
            break
        xi = step_x_block(problem, x, y, i, alpha, q_value, grad_i)
        if np.array_equal(xi, x[sl]):
            # No move: the test reduces to Q(x, y) <= q_ref, checked on the
            # ratio because zeta <= q_ref * eta can fail by an ulp.
            zeta = problem.f_value(x) + h.cached_value(cache)
            eta = float(x @ y) - gs
            if eta > 0.0 and zeta / eta <= q_ref:
                return _Accepted(x.copy(), alpha, bt, cache, zeta, eta)
        cand = x.copy()
        cand[sl] = xi
        fval = problem.f_value(cand)
        if np.isfinite(fval):
            new_cache = h.cache(cand) if fresh else h.cached_update(cache, sl, xi)
            zeta = fval + h.cached_value(new_cache)
            eta = float(cand @ y) - gs
            d = xi - x[sl]
            # The ratio check is implied by the first test in exact
            # arithmetic; it keeps the stored Q values rounding-safe.
            if zeta + 0.5 * sigma * float(d @ d) <= q_ref * eta and eta > 0.0 and zeta / eta <= q_ref:
                return _Accepted(cand, alpha, bt, new_cache, zeta, eta)
        alpha *= gamma
    raise LineSearchError(f"block {i}: no acceptable step after {bt} backtracks (alpha={alpha:g})")


def line_search_x(problem, x, y, i, alpha_init, sigma, gamma, q_ref, q_value=None):
    """Backtrack on block ``i`` until the nonmonotone acceptance test holds.

    Returns ``(x_new, alpha_accepted, backtracks)``. ``q_value`` is the
    current ``Q(x, y)`` used inside the prox argument; it defaults to the
    evaluated value.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    gs = problem.gconj.conj_value(y)
    cache = problem.h.cache(x)
    sl = problem.partition.slices[i - 1]
    if q_value is None:
        q_value = (problem.f_value(x) + problem.h.cached_value(cache)) / (float(x @ y) - gs)
    grad_i = problem.h.cached_partial_grad(cache, sl)
    res = _line_search(problem, x, y, gs, cache, i, grad_i, alpha_init, sigma, gamma, q_value, q_ref)
    return res.x, res.alpha, res.backtracks


def bb_stepsize(dx, dgrad, floor, cap, alpha_prev):
    """Barzilai-Borwein step ``||dx||^2 / |<dx, dgrad>|`` clipped to ``[floor, cap]``."""
    curv = abs(float(np.dot(dx, dgrad)))
    return _bb_from(float(np.dot(dx, dx)), curv, floor, cap, alpha_prev)


def _bb_from(sq, curv, floor, cap, alpha_prev):
    curv = abs(curv)
    if curv >= BB_CURVATURE_EPS:
        return max(floor, min(cap, sq / curv))
    return alpha_prev


def schedule_next(t, mode, rng, N):
    """Index in ``{0, ..., N}``; 0 selects the dual update."""
    if mode.kind == "cyclic":
        return t % (N + 1)
    if mode.probs is None:
        return int(rng.integers(N + 1))
    return int(rng.choice(N + 1, p=mode.probs))


def _check_start(problem, x0):
    F0 = eval_F(problem, x0)
    if not F0.is_finite:
        raise ValueError("x0 is infeasible: F(x0) is not finite")
    # L1/L2: the level set is closed only below liminf of F at 0.
    from .models import L2Norm, ScaledLeastSquares

    h = problem.h
    if isinstance(h, ScaledLeastSquares) and isinstance(problem.gconj, L2Norm):
        bound = 1.0 + 0.5 * h.lam * float(h.b @ h.b)
        if not F0.value < bound:
            raise ValueError(f"F(x0) = {F0.value} must be below 1 + lam/2 ||b||^2 = {bound}")
    return F0.value


def solve(problem, x0, config, y0=None):
    """Run the iterations from ``x0`` until the stop rule fires or
    ``config.max_epochs`` epochs (``N + 1`` iterations each) have run.

    The stop rule is checked at the start of every epoch; its cost is kept
    out of ``wall_time``.
    """
    x = np.array(x0, dtype=np.float64)
    F0 = _check_start(problem, x)
    y = initial_dual(problem, x) if y0 is None else np.array(y0, dtype=np.float64)

    N = problem.partition.N
    slices = problem.partition.slices
    h, gconj = problem.h, problem.gconj
    cfg = config
    rng = np.random.default_rng(cfg.seed)

    state = IterateState(x=x, y=y, q_window=deque(maxlen=cfg.M + 1), alpha_prev=cfg.bb_init)
    cache = h.cache(x)
    gs = gconj.conj_value(y)
    alpha_bb = cfg.bb_init
    refresh_due = False
    if y0 is None:
        # g(x0) = <x0, y0> - g*(y0) for y0 in dg(x0); evaluating F(x0) this
        # way matches the evaluator used for every Q_t.
        F0 = (problem.f_value(x) + h.cached_value(cache)) / (float(x @ y) - gs)

    q_trace, step_trace, move_trace, stop_trace = [], [], [], []
    termination = Termination.MAX_EPOCHS
    spent = 0.0
    dual_kept = 0
    t = 0
    clock = time.perf_counter()
    while True:
        if t % (N + 1) == 0:
            # The next primal move rebuilds the cache from scratch, which
            # bounds drift while the value it is accepted with stays the
            # value stored for Q.
            refresh_due = True
            if cfg.stop_rule is not None:
                tic = time.perf_counter()
                measure = cfg.stop_rule.measure(problem, x, y)
                stop_trace.append((t // (N + 1), measure))
                spent += time.perf_counter() - tic
                if measure < cfg.stop_rule.tol:
                    termination = (
                        Termination.RELERR if cfg.stop_rule.kind == "relerr" else Termination.RESIDUAL
                    )
                    break
            if t // (N + 1) >= cfg.max_epochs:
                break

        # objective value and nonmonotone reference
        zeta = problem.f_value(x) + h.cached_value(cache)
        eta = float(x @ y) - gs
        if not (eta > 0.0 and zeta >= 0.0 and np.isfinite(zeta)):
            raise AssertionError(f"iterate left dom(Q) at t={t}: zeta={zeta}, eta={eta}")
        q_t = zeta / eta
        state.q_window.append(q_t)
        q_ref, _ = nonmonotone_reference(state.q_window, t, cfg.M)
        q_trace.append((t, q_t, q_ref))

        # BB proposal from the previous iteration's primal move
        if state.last_move is not None:
            sl, dx, old, new = state.last_move
            alpha_bb = _bb_from(float(dx @ dx), h.cached_curvature(old, new, sl, dx),
                                cfg.bb_floor, cfg.alpha_hi, alpha_bb)
        state.alpha_prev = alpha_bb

        # block update
        i = schedule_next(t, cfg.schedule, rng, N)
        if i == 0:
            alpha = cfg.alpha_y
            y_new = step_y(problem, x, y, alpha)
            gs_new = gconj.conj_value(y_new)
            # A dual step never lowers eta in exact arithmetic; a computed
            # decrease is rounding at a fixed point, so y is kept.
            if float(x @ y_new) - gs_new >= eta:
                dy = y_new - y
                y, gs = y_new, gs_new
            else:
                dy = np.zeros_like(y)
                dual_kept += 1
            move_trace.append(q_ref * float(dy @ dy))
            step_trace.append((t, 0, alpha, 0))
            state.last_move = None
        else:
            sl = slices[i - 1]
            grad_i = h.cached_partial_grad(cache, sl)
            acc = _line_search(problem, x, y, gs, cache, i, grad_i, alpha_bb,
                               cfg.sigma, cfg.gamma, q_t, q_ref, fresh=refresh_due)
            if acc.cache is not cache:
                refresh_due = False
            dx = acc.x[sl] - x[sl]
            move_trace.append(float(dx @ dx))
            state.last_move = (sl, dx, cache, acc.cache)
            x, cache = acc.x, acc.cache
            step_trace.append((t, i, acc.alpha, acc.backtracks))
        t += 1

    wall = time.perf_counter() - clock - spent
    state.x, state.y, state.t = x, y, t
    log.debug("solve finished: t=%d, termination=%s", t, termination.value)
    return SolveReport(
        iterations=t,
        epochs=t // (N + 1),
        q_trace=q_trace,
        step_trace=step_trace,
        move_trace=move_trace,
        stop_trace=stop_trace,
        termination=termination,
        wall_time=wall,
        final_x=x,
        final_y=y,
        F0=F0,
        dual_kept=dual_kept,
    )
