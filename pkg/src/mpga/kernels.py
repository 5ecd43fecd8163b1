"""Inner-loop kernels.

Each kernel has a loop form (compiled by numba unless disabled through
``MPGA_DISABLE_NUMBA``) and, where the operation vectorizes, a numpy form.
The public names at the bottom pick the implementation for the session.
"""
import numpy as np

from ._accel import HAVE_NUMBA, jit


def _pava_sorted_l1_loop(y, lam):
    # y: non-negative, sorted descending; lam: non-increasing, non-negative.
    n = y.shape[0]
    start = np.empty(n, dtype=np.int64)
    stop = np.empty(n, dtype=np.int64)
    total = np.empty(n, dtype=np.float64)
    level = np.empty(n, dtype=np.float64)
    k = 0
    for i in range(n):
        start[k] = i
        stop[k] = i
        total[k] = y[i] - lam[i]
        level[k] = total[k]
        while k > 0 and level[k - 1] <= level[k]:
            k -= 1
            stop[k] = i
            total[k] += total[k + 1]
            level[k] = total[k] / (stop[k] - start[k] + 1)
        k += 1
    out = np.empty(n, dtype=np.float64)
    for j in range(k):
        v = level[j] if level[j] > 0.0 else 0.0
        for i in range(start[j], stop[j] + 1):
            out[i] = v
    return out


def _soft_clip_loop(v, alpha, lower, upper):
    n = v.shape[0]
    out = np.empty(n, dtype=np.float64)
    for j in range(n):
        a = v[j]
        if a > alpha:
            a = a - alpha
        elif a < -alpha:
            a = a + alpha
        else:
            a = 0.0
        if a < lower[j]:
            a = lower[j]
        elif a > upper[j]:
            a = upper[j]
        out[j] = a
    return out


def _soft_clip_numpy(v, alpha, lower, upper):
    shrunk = np.sign(v) * np.maximum(np.abs(v) - alpha, 0.0)
    return np.minimum(np.maximum(shrunk, lower), upper)


def _l1_box_value_loop(x, lower, upper):
    acc = 0.0
    for j in range(x.shape[0]):
        if x[j] < lower[j] or x[j] > upper[j]:
            return np.inf
        acc += abs(x[j])
    return acc


def _l1_box_value_numpy(x, lower, upper):
    if np.any(x < lower) or np.any(x > upper):
        return np.inf
    return float(np.abs(x).sum())


def _l1_box_gap_loop(v, x, lower, upper, band):
    # Squared distance from v to the subdifferential of |.| + box at x.
    acc = 0.0
    for j in range(v.shape[0]):
        xj = x[j]
        if xj > 0.0:
            lo = 1.0
            hi = 1.0
        elif xj < 0.0:
            lo = -1.0
            hi = -1.0
        else:
            lo = -1.0
            hi = 1.0
        if xj >= upper[j] - band:
            hi = np.inf
        if xj <= lower[j] + band:
            lo = -np.inf
        vj = v[j]
        if vj < lo:
            acc += (lo - vj) * (lo - vj)
        elif vj > hi:
            acc += (vj - hi) * (vj - hi)
    return acc


def _l1_box_gap_numpy(v, x, lower, upper, band):
    s = np.sign(x)
    lo = np.where(x == 0.0, -1.0, s)
    hi = np.where(x == 0.0, 1.0, s)
    hi = np.where(x >= upper - band, np.inf, hi)
    lo = np.where(x <= lower + band, -np.inf, lo)
    gap = np.maximum(lo - v, 0.0) + np.maximum(v - hi, 0.0)
    return float(gap @ gap)


pava_sorted_l1_loop = jit(_pava_sorted_l1_loop)
soft_clip_loop = jit(_soft_clip_loop)
l1_box_value_loop = jit(_l1_box_value_loop)
l1_box_gap_loop = jit(_l1_box_gap_loop)

pava_sorted_l1 = pava_sorted_l1_loop
if HAVE_NUMBA:
    soft_clip = soft_clip_loop
    l1_box_value = l1_box_value_loop
    l1_box_gap = l1_box_gap_loop
else:
    soft_clip = _soft_clip_numpy
    l1_box_value = _l1_box_value_numpy
    l1_box_gap = _l1_box_gap_numpy

soft_clip_numpy = _soft_clip_numpy
l1_box_value_numpy = _l1_box_value_numpy
l1_box_gap_numpy = _l1_box_gap_numpy
