"""Independent reference implementations used only by the tests."""
import numpy as np


def project_linf_l1(z, K, iters=200):
    """Projection onto ``{||y||_inf <= 1, ||y||_1 <= K}`` by bisection on the
    l1 multiplier: ``y = sign(z) * min(max(|z| - tau, 0), 1)``."""
    a = np.abs(z)
    clip = lambda tau: np.minimum(np.maximum(a - tau, 0.0), 1.0)
    if clip(0.0).sum() <= K:
        return np.sign(z) * clip(0.0)
    lo, hi = 0.0, float(a.max())
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if clip(mid).sum() > K:
            lo = mid
        else:
            hi = mid
    return np.sign(z) * clip(hi)


def prox_knorm_waterfill(z, beta, K):
    """Moreau: ``prox_{beta ||.||_(K)}(z) = z - beta * P(z / beta)``."""
    return z - beta * project_linf_l1(z / beta, K)


def knorm_rows(W, K):
    a = np.sort(np.abs(W), axis=1)[:, ::-1]
    return a[:, :K].sum(axis=1)
