import numpy as np
import pytest

from mpga.bench import experiment_config
from mpga.criticality import StoppingRule, dist_subdiff_Q_l1l2, fixed_point_residual, rel_err
from mpga.instances import init_point
from mpga.models import l1l2_problem
from mpga.problem import initial_dual
from mpga.prox import BoxBounds
from mpga.solver import Termination, solve


def _reference_dist(x, y, A, b, lam, box, band=1e-12):
    """Straight-line recomputation of the subdifferential distance."""
    r = A @ x - b
    nx = np.linalg.norm(x)
    zeta = np.abs(x).sum() + 0.5 * lam * nx * (r @ r)
    eta = x @ y
    q = zeta / eta
    v = q * y - (0.5 * lam * (r @ r) * x / nx + lam * nx * (A.T @ r))
    first = 0.0
    for j in range(x.size):
        lo, hi = (-1.0, 1.0) if x[j] == 0 else (np.sign(x[j]), np.sign(x[j]))
        if x[j] >= box.upper[j] - band:
            hi = np.inf
        if x[j] <= box.lower[j] + band:
            lo = -np.inf
        first += max(lo - v[j], 0.0, v[j] - hi) ** 2
    ny = np.linalg.norm(y)
    if ny < 1 - band:
        second = nx
    else:
        u = y / ny
        second = np.linalg.norm(x - max(x @ u, 0.0) * u)
    return np.sqrt(first + (q * second) ** 2) / eta


def _tiny_l1l2(rng):
    A = rng.standard_normal((5, 8))
    b = rng.standard_normal(5)
    return A, b, 0.7, BoxBounds.symmetric(8, 3.0)


def test_second_term_examples():
    A = np.zeros((1, 2))
    box = BoxBounds.symmetric(2, 10.0)
    x = np.array([3.0, 4.0])
    # y interior: second term is ||x||; here zeta = 7, eta = 0.7, Q = 10
    y = np.array([0.1, 0.0]) / 0.3 * 0.3 + np.array([0.0, 0.1])
    eta = x @ y
    q = 7.0 / eta
    first = 0.0  # Q y - grad h = Q y with grad h = 0; distance to {1}x{1}
    first += (1 - q * y[0]) ** 2 + (1 - q * y[1]) ** 2
    expect = np.sqrt(first + q**2 * 25) / eta
    assert dist_subdiff_Q_l1l2(x, y, A, np.zeros(1), 1.0, box) == pytest.approx(expect, rel=1e-14)
    # y on the sphere with x = 2 y: x lies on the ray
    y = np.array([0.6, 0.8])
    x = 2 * y
    d = dist_subdiff_Q_l1l2(x, y, A, np.zeros(1), 1.0, box)
    q = np.abs(x).sum() / (x @ y)
    assert d == pytest.approx(np.linalg.norm(q * y - 1.0) / (x @ y), rel=1e-14)


def test_dist_matches_reference(rng):
    A, b, lam, box = _tiny_l1l2(rng)
    for _ in range(200):
        x = rng.uniform(-3, 3, 8)
        x[rng.random(8) < 0.3] = 0.0
        x[rng.random(8) < 0.1] = 3.0
        if not x.any():
            continue
        y = x / np.linalg.norm(x) if rng.random() < 0.5 else x / (np.linalg.norm(x) * rng.uniform(1, 3))
        d = dist_subdiff_Q_l1l2(x, y, A, b, lam, box)
        assert d == pytest.approx(_reference_dist(x, y, A, b, lam, box), rel=1e-10, abs=1e-14)


def test_dist_edge_cases(rng):
    A, b, lam, box = _tiny_l1l2(rng)
    x = rng.uniform(-1, 1, 8)
    with pytest.raises(ValueError):
        dist_subdiff_Q_l1l2(x, 1.1 * x / np.linalg.norm(x), A, b, lam, box)
    with pytest.raises(ValueError):
        dist_subdiff_Q_l1l2(x, -x / np.linalg.norm(x), A, b, lam, box)
    assert dist_subdiff_Q_l1l2(np.zeros(8), np.zeros(8), A, np.zeros(5), lam, box) == 0.0


def test_dist_zero_at_critical_instance(small_l1l2):
    inst = small_l1l2
    xt = inst.x_true
    d = dist_subdiff_Q_l1l2(xt, xt / np.linalg.norm(xt), inst.A, inst.b, inst.lam, inst.box)
    assert d <= 1e-8
    assert _reference_dist(xt, xt / np.linalg.norm(xt), inst.A, inst.b, inst.lam, inst.box) <= 1e-8


def test_fixed_point_residual(small_l1sk, rng):
    inst = small_l1sk
    prob = inst.problem(4)
    xt = inst.x_true
    yt = initial_dual(prob, xt)
    for a0, ab in ((1.0, 1e-3), (10.0, 1e-4), (0.1, 1e-2)):
        assert fixed_point_residual(prob, xt, yt, a0, ab) <= 1e-8
    # a y off the dual ball has g*(y) = inf, so (x, y) leaves dom(Q) and is rejected
    off = yt.copy()
    off[np.argmax(np.abs(off))] *= 1.1
    with pytest.raises(ValueError):
        fixed_point_residual(prob, xt, off, 1.0, 1e-3)
    # a 0.1 perturbation that stays feasible but leaves dg(x)
    assert fixed_point_residual(prob, xt, 0.9 * yt, 1.0, 1e-3) > 0
    g = prob.gconj
    for _ in range(20):
        x = rng.uniform(-2, 2, prob.n)
        y = g.prox_conj(rng.standard_normal(prob.n), 1.0)
        if x @ y - g.conj_value(y) <= 0:
            continue
        assert fixed_point_residual(prob, x, y, 1.0, 1e-3) > 0.1
    with pytest.raises(ValueError):
        fixed_point_residual(prob, xt, -yt, 1.0, 1e-3)


def test_rel_err(small_l1sk):
    xt = small_l1sk.x_true
    assert rel_err(xt, xt) == 0.0
    assert rel_err(1.001 * xt, xt) == pytest.approx(0.001, rel=1e-12)
    x0 = init_point(small_l1sk)
    assert rel_err(x0, xt) == pytest.approx(np.sqrt(np.sum((x0 - xt) ** 2) / np.sum(xt**2)), rel=1e-14)
    with pytest.raises(ValueError):
        rel_err(xt, np.zeros_like(xt))


def test_stopping_rule_validation():
    with pytest.raises(ValueError):
        StoppingRule("relerr", 1e-3)
    with pytest.raises(ValueError):
        StoppingRule.subdiff(0.0)
    with pytest.raises(ValueError):
        StoppingRule("gap", 1.0)


def test_certificate_is_idempotent(small_l1l2):
    inst = small_l1l2
    cfg = experiment_config(inst, "cmpga", 8, 2, 0)
    rep = solve(inst.problem(8), init_point(inst), cfg)
    assert rep.termination is Termination.RESIDUAL
    x, y = rep.final_x, rep.final_y
    again = dist_subdiff_Q_l1l2(x, y, inst.A, inst.b, inst.lam, inst.box) / np.sqrt(x @ x + y @ y)
    assert again < 1e-7 and again == pytest.approx(rep.final_measure, rel=1e-9)


def test_fixed_point_residual_decays_monotone_run(small_l1sk):
    inst = small_l1sk
    prob = inst.problem(4)
    cfg = experiment_config(inst, "cmpga", 4, 0, 0, tol=1e-6)
    rep = solve(prob, init_point(inst), cfg)
    assert rep.termination is Termination.RELERR
    assert fixed_point_residual(prob, rep.final_x, rep.final_y, 1.0, 1e-3) < 1e-5
