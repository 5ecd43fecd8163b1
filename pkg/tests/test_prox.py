import numpy as np
import pytest

from mpga.models import KNorm, L2Norm
from mpga.prox import (BoxBounds, brute_prox_oracle, knorm, project_l2_ball, prox_conj_via_moreau,
                       prox_knorm, prox_l1_box)

from _oracles import knorm_rows, project_linf_l1, prox_knorm_waterfill


def box1(lo, hi):
    return BoxBounds(np.array([lo]), np.array([hi]))


def test_prox_l1_box_examples():
    b = box1(-1.0, 1.0)
    assert prox_l1_box(np.array([2.0]), 0.5, b)[0] == 1.0
    assert prox_l1_box(np.array([0.3]), 0.5, b)[0] == 0.0
    with pytest.raises(ValueError):
        prox_l1_box(np.array([1.0]), 0.0, b)


def test_prox_l1_box_dense_grid(rng):
    for _ in range(20):
        lo = rng.uniform(-3, 0.5)
        hi = lo + rng.uniform(0.1, 3)
        v, a = rng.uniform(-4, 4), rng.uniform(0.05, 2)
        grid = np.linspace(lo, hi, 1_000_000)
        best = grid[np.argmin(a * np.abs(grid) + 0.5 * (grid - v) ** 2)]
        got = prox_l1_box(np.array([v]), a, box1(lo, hi))[0]
        assert abs(got - best) <= grid[1] - grid[0]


def test_prox_l1_literal_identity(rng):
    v = rng.standard_normal(1000) * 3
    a = 0.7
    wide = BoxBounds.symmetric(1000, 100.0)
    assert np.array_equal(prox_l1_box(v, a, wide), np.sign(v) * np.maximum(np.abs(v) - a, 0.0))


def test_project_l2_ball(rng):
    assert np.allclose(project_l2_ball(np.array([3.0, 4.0])), [0.6, 0.8], atol=1e-15)
    assert np.array_equal(project_l2_ball(np.array([0.3, 0.4])), [0.3, 0.4])
    for _ in range(50):
        z = rng.standard_normal(5) * rng.uniform(0.1, 5)
        p = project_l2_ball(z)
        assert np.linalg.norm(p) <= 1 + 1e-15
        W = rng.standard_normal((100, 5))
        W /= np.maximum(1.0, np.linalg.norm(W, axis=1))[:, None]
        assert np.all((W - p) @ (z - p) <= 1e-12)


def test_prox_knorm_examples(rng):
    z = rng.standard_normal(9) * 2
    assert np.allclose(prox_knorm(z, 0.6, 9), np.sign(z) * np.maximum(np.abs(z) - 0.6, 0), atol=1e-14)
    assert np.allclose(prox_knorm(np.array([3.0, 1.0]), 1.0, 1), [2.0, 1.0], atol=1e-14)
    assert np.allclose(prox_knorm_waterfill(np.array([3.0, 1.0]), 1.0, 1), [2.0, 1.0], atol=1e-12)
    assert np.array_equal(prox_knorm(np.array([0.5, 0.2]), 1.0, 1), [0.0, 0.0])
    for bad in (0, 10):
        with pytest.raises(ValueError):
            prox_knorm(z, 1.0, bad)
    with pytest.raises(ValueError):
        prox_knorm(z, 0.0, 2)


def test_prox_knorm_vs_waterfill(rng):
    for _ in range(300):
        n = int(rng.integers(1, 40))
        K = int(rng.integers(1, n + 1))
        z = rng.standard_normal(n) * rng.uniform(0.1, 10)
        beta = rng.uniform(0.01, 5)
        assert np.allclose(prox_knorm(z, beta, K), prox_knorm_waterfill(z, beta, K), atol=1e-9)


def test_prox_knorm_ties_are_deterministic():
    z = np.array([2.0, -2.0, 2.0, 1.0])
    w = prox_knorm(z, 0.5, 2)
    assert np.array_equal(w, prox_knorm(z.copy(), 0.5, 2))
    assert np.allclose(w, prox_knorm_waterfill(z, 0.5, 2), atol=1e-12)


def test_prox_knorm_certificate(rng):
    for _ in range(300):
        n = int(rng.integers(2, 30))
        K = int(rng.integers(1, n + 1))
        z = rng.standard_normal(n) * 4
        beta = rng.uniform(0.05, 3)
        w = prox_knorm(z, beta, K)
        u = (z - w) / beta
        assert np.max(np.abs(u)) <= 1 + 1e-8 and np.abs(u).sum() <= K + 1e-8
        assert abs(w @ u - knorm(w, K)) <= 1e-8


def test_moreau_adapter(rng):
    l2 = L2Norm()

    def l2_prox(v, s):
        nv = np.linalg.norm(v)
        return v * max(0.0, 1 - s / nv) if nv > 0 else v

    for _ in range(200):
        z = rng.standard_normal(6) * rng.uniform(0.1, 5)
        a = rng.uniform(0.01, 100)
        assert np.allclose(prox_conj_via_moreau(z, a, l2_prox), project_l2_ball(z), atol=1e-12)
        K = int(rng.integers(1, 7))
        y = KNorm(K).prox_conj(z, a)
        assert np.max(np.abs(y)) <= 1 + 1e-10 and np.abs(y).sum() <= K + 1e-10
        # reassembly: y + a * prox_{g/a}(z/a) == z
        back = y + a * prox_knorm(z / a, 1.0 / a, K)
        assert np.max(np.abs(back - z)) <= 1e-14 * max(1.0, np.max(np.abs(z)))
    for prox in (l2_prox, lambda v, s: prox_knorm(v, s, 2)):
        assert np.array_equal(prox_conj_via_moreau(np.zeros(4), 0.3, prox), np.zeros(4))
    with pytest.raises(ValueError):
        prox_conj_via_moreau(np.ones(3), 0.0, l2_prox)


@pytest.mark.parametrize("op", ["l1box", "knorm", "l2ball", "knorm_conj"])
def test_firm_nonexpansive(rng, op):
    n = 7
    box = BoxBounds(-rng.uniform(0.5, 2, n), rng.uniform(0.5, 2, n))
    P = {
        "l1box": lambda z: prox_l1_box(z, 0.4, box),
        "knorm": lambda z: prox_knorm(z, 0.8, 3),
        "l2ball": project_l2_ball,
        "knorm_conj": lambda z: KNorm(3).prox_conj(z, 2.5),
    }[op]
    for _ in range(1000):
        z1, z2 = rng.standard_normal(n) * 3, rng.standard_normal(n) * 3
        d = P(z1) - P(z2)
        assert d @ d <= d @ (z1 - z2) + 1e-10


def test_brute_oracle_examples():
    w, step = brute_prox_oracle(np.array([2.0]), 0.5, lambda W: np.abs(W[:, 0]))
    assert abs(w[0] - 1.5) <= step
    w, step = brute_prox_oracle(np.array([3.0, 1.0]), 1.0, lambda W: np.max(np.abs(W), axis=1))
    assert np.max(np.abs(w - [2.0, 1.0])) <= step
    box = BoxBounds(np.array([-1.0, -0.5]), np.array([1.0, 2.0]))
    z = np.array([2.3, -0.2])

    def l1box(W):
        inside = np.all((W >= box.lower) & (W <= box.upper), axis=1)
        return np.where(inside, np.abs(W).sum(axis=1), np.inf)

    w, step = brute_prox_oracle(z, 0.6, l1box)
    assert np.max(np.abs(w - prox_l1_box(z, 0.6, box))) <= 2 * step
    with pytest.raises(ValueError):
        brute_prox_oracle(np.zeros(4), 1.0, lambda W: W[:, 0])


def test_brute_oracle_3d_knorm(rng):
    for _ in range(5):
        z = rng.standard_normal(3) * 2
        w, step = brute_prox_oracle(z, 0.7, lambda W: knorm_rows(W, 2))
        assert np.max(np.abs(w - prox_knorm(z, 0.7, 2))) <= 2 * step


def test_project_linf_l1_oracle_sanity(rng):
    z = rng.standard_normal(10) * 3
    y = project_linf_l1(z, 2)
    assert np.abs(y).sum() <= 2 + 1e-9 and np.max(np.abs(y)) <= 1
