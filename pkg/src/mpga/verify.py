"""Invariant checks on a single instance (driven by ``mpga verify``)."""
from __future__ import annotations

import numpy as np

from .instances import L1L2, L1L2_CERT_TOL, L1SK, L1SK_CERT_TOL, init_point
from .problem import eval_eta, eval_F, initial_dual
from .solver import solve


def trace_violations(report, rtol_f0=0.0):
    """Count breaches of the descent relations in a solve trace.

    Returns ``(ref_increases, above_F0)``: how often the window maximum rose
    and how often ``Q_t`` exceeded ``F(x0)``. ``F(x0)`` comes from a different
    evaluation path than ``Q_t``, hence the relative slack on that one.
    """
    q = np.array([row[1] for row in report.q_trace])
    ref = np.array([row[2] for row in report.q_trace])
    ref_up = int(np.sum(np.diff(ref) > 0))
    above = int(np.sum(q > report.F0 * (1 + rtol_f0)))
    return ref_up, above


def run_checks(inst, samples=20, epochs=20, seed=0):
    """List of ``(name, passed, detail)`` tuples."""
    from .bench import experiment_config

    rng = np.random.default_rng(seed)
    out = []
    problem = inst.problem(min(8, inst.n))
    h, g = problem.h, problem.gconj

    cert = inst.certificate()
    tol = L1SK_CERT_TOL if inst.model == L1SK else L1L2_CERT_TOL
    out.append(("ground truth certificate", cert <= tol, f"{cert:.3e} <= {tol:g}"))
    if inst.model == L1SK:
        gap = float(np.max(np.abs(inst.A @ inst.x_true - inst.b)))
        out.append(("b = A x_true", gap == 0.0, f"max gap {gap:.3e}"))

    lo, hi = inst.box.lower, inst.box.upper
    worst_block = worst_fd = worst_fy = worst_eq = 0.0
    for _ in range(samples):
        x = rng.uniform(np.maximum(lo, -1.0), np.minimum(hi, 1.0))
        full = h.grad(x)
        for sl in problem.partition.slices:
            d = np.max(np.abs(h.partial_grad(x, sl) - full[sl]))
            worst_block = max(worst_block, d / (1 + np.max(np.abs(full))))
        d = rng.standard_normal(inst.n)
        d /= np.linalg.norm(d)
        eps = 1e-6
        fd = (h.value(x + eps * d) - h.value(x - eps * d)) / (2 * eps)
        worst_fd = max(worst_fd, abs(fd - full @ d) / (1 + abs(full @ d)))
        y = g.prox_conj(rng.standard_normal(inst.n) * 3, 1.0)
        gx = g.value(x)
        worst_fy = max(worst_fy, (float(eval_eta(problem, x, y)) - gx) / (1 + abs(gx)))
        worst_eq = max(worst_eq, abs(float(eval_eta(problem, x, initial_dual(problem, x))) - gx) / (1 + gx))
    out.append(("block gradient consistency", worst_block <= 1e-12, f"{worst_block:.3e}"))
    out.append(("finite-difference gradient", worst_fd <= 1e-6, f"{worst_fd:.3e}"))
    out.append(("Fenchel-Young inequality", worst_fy <= 1e-10, f"max excess {worst_fy:.3e}"))
    out.append(("initial dual attains g(x)", worst_eq <= 1e-10, f"{worst_eq:.3e}"))

    x0 = init_point(inst)
    F0 = eval_F(problem, x0)
    ok = F0.is_finite
    if inst.model == L1L2:
        ok = ok and F0.value < 1.0 + 0.5 * inst.lam * float(inst.b @ inst.b)
    out.append(("admissible start", bool(ok), f"F(x0) = {F0!r}"))

    cfg = experiment_config(inst, "cmpga", problem.partition.N, 2, seed, max_epochs=epochs)
    rep = solve(problem, x0, cfg)
    ref_up, above = trace_violations(rep)
    out.append(("nonmonotone reference non-increasing", ref_up == 0, f"{ref_up} violations"))
    out.append(("Q_t <= F(x0)", above == 0, f"{above} violations"))
    return out
