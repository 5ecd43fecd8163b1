"""Random sparse-recovery instances with oversampled-DCT sensing matrices."""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .criticality import dist_subdiff_Q_l1l2, fixed_point_residual
from .models import l1l2_problem, l1sk_problem
from .problem import eval_F, initial_dual
from .prox import BoxBounds

L1L2 = "L1L2"
L1SK = "L1SK"
_MODEL_TAGS = {L1L2: 1, L1SK: 2}

MAGIC = b"MPGAINST"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sQQQQQddQQ")

L1SK_CERT_TOL = 1e-6
L1L2_CERT_TOL = 1e-8
L1L2_MAX_ATTEMPTS = 100


class ConstructionError(RuntimeError):
    pass


@dataclass
class Instance:
    model: str
    A: np.ndarray
    b: np.ndarray
    x_true: np.ndarray
    box: BoxBounds
    lam: float
    D: float
    K: int
    seed: int
    r: int
    meta: dict = field(default_factory=dict)

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]

    def problem(self, N=1):
        if self.model == L1SK:
            return l1sk_problem(self.A, self.b, self.lam, self.K, self.box, N)
        return l1l2_problem(self.A, self.b, self.lam, self.box, N)

    def certificate(self):
        """Criticality measure at the ground truth (see ``make_*_instance``)."""
        if self.model == L1SK:
            p = self.problem()
            return fixed_point_residual(p, self.x_true, initial_dual(p, self.x_true), 1.0, 1.0)
        y = self.x_true / np.linalg.norm(self.x_true)
        return dist_subdiff_Q_l1l2(self.x_true, y, self.A, self.b, self.lam, self.box)


def gen_dct_matrix(m, n, D, seed):
    """Columns ``cos(2 pi w j / D) / sqrt(m)``, ``j = 1..n``, with ``w ~ U[0,1]^m``."""
    if m < 1 or n < 1 or not D > 0:
        raise ValueError("need m, n >= 1 and D > 0")
    omega = np.random.default_rng(seed).random(m)
    j = np.arange(1, n + 1, dtype=np.float64)
    return np.cos(2.0 * np.pi * np.outer(omega, j) / D) / np.sqrt(m)


def _separation(D):
    return int(math.ceil(2 * D))


def gen_support(n, r, D, seed):
    """``r`` sorted indices with pairwise gaps of at least ``ceil(2D)``, uniform
    over all such sets (sample in the shrunk range, then re-inflate)."""
    sep = _separation(D)
    span = n - (r - 1) * (sep - 1)
    if r < 1 or span < r:
        raise ValueError(f"cannot place {r} indices {sep} apart in {n} slots")
    pos = np.sort(np.random.default_rng(seed).choice(span, size=r, replace=False))
    return pos + np.arange(r) * (sep - 1)


def gen_signal_l1sk(support, n, seed):
    """Random +-1 on the support."""
    x = np.zeros(n)
    x[support] = 2.0 * np.random.default_rng(seed).integers(0, 2, size=len(support)) - 1.0
    return x


def gen_signal_l1l2(support, n, seed):
    """``s * 10^(3u)`` on the support, ``s`` a fair sign and ``u ~ U[0, 1)``."""
    rng = np.random.default_rng(seed)
    k = len(support)
    signs = 2.0 * rng.integers(0, 2, size=k) - 1.0
    x = np.zeros(n)
    x[support] = signs * 10.0 ** (3.0 * rng.random(k))
    return x


def _streams(seed):
    return np.random.SeedSequence(int(seed)).spawn(3)


def make_l1sk_instance(m, n, r, D, lam, K=None, seed=0):
    K = r if K is None else int(K)
    s_A, s_supp, s_sig = _streams(seed)
    A = gen_dct_matrix(m, n, D, s_A)
    x_true = gen_signal_l1sk(gen_support(n, r, D, s_supp), n, s_sig)
    inst = Instance(L1SK, A, A @ x_true, x_true, BoxBounds.symmetric(n, 2.0),
                    float(lam), float(D), K, int(seed), int(r))
    cert = inst.certificate()
    inst.meta["certificate"] = cert
    if not cert <= L1SK_CERT_TOL:
        raise ConstructionError(f"seed {seed}: fixed-point residual {cert:.3e} at x_true")
    return inst


def _critical_measurements(A, x_true, lam):
    """``b = A x - rho`` making ``x`` stationary: on the support,
    ``lam a_j^T rho = w_j - sign(x_j)/||x||`` with ``w = ||x||_1/||x||^3 x``;
    ``rho`` is the minimum-norm solution."""
    supp = np.flatnonzero(x_true)
    nx = float(np.linalg.norm(x_true))
    xs = x_true[supp]
    rhs = np.abs(x_true).sum() / nx**3 * xs - np.sign(xs) / nx
    rho = np.linalg.lstsq(A[:, supp].T, rhs / lam, rcond=None)[0]
    off = np.ones(A.shape[1], dtype=bool)
    off[supp] = False
    slack = float(np.max(np.abs(lam * (A[:, off].T @ rho)), initial=0.0)) * nx
    return A @ x_true - rho, slack


def make_l1l2_instance(m, n, r, D, lam, seed=0):
    """Instance whose ground truth is a critical point; resamples with seed
    offsets until the off-support condition and the certificate hold."""
    if r > m:
        raise ValueError("need r <= m")
    tried = []
    for attempt in range(L1L2_MAX_ATTEMPTS):
        s = int(seed) + attempt
        tried.append(s)
        s_A, s_supp, s_sig = _streams(s)
        A = gen_dct_matrix(m, n, D, s_A)
        x_true = gen_signal_l1l2(gen_support(n, r, D, s_supp), n, s_sig)
        b, slack = _critical_measurements(A, x_true, lam)
        if slack > 1.0 or not np.any(b):
            continue
        inst = Instance(L1L2, A, b, x_true, BoxBounds.symmetric(n, 1000.0),
                        float(lam), float(D), 0, s, int(r))
        cert = inst.certificate()
        if cert <= L1L2_CERT_TOL:
            inst.meta.update(certificate=cert, attempts=attempt + 1, requested_seed=int(seed),
                             off_support_slack=slack)
            return inst
    raise ConstructionError(f"no critical L1/L2 instance after seeds {tried[0]}..{tried[-1]}")


def init_point(inst, seed=None):
    """Starting point used by the experiments.

    L1/SK: ``x_true + 0.2 e`` with ``e ~ U[-1,1]^n``, clamped to the box.
    L1/L2: one-sparse point on the first column correlated with ``b``.
    """
    if inst.model == L1SK:
        rng = np.random.default_rng(np.random.SeedSequence([int(inst.seed if seed is None else seed), 1]))
        x0 = inst.x_true + 0.2 * rng.uniform(-1.0, 1.0, inst.n)
        clamped = np.clip(x0, inst.box.lower, inst.box.upper)
        inst.meta["init_clamped"] = bool(np.any(clamped != x0))
        return clamped
    corr = inst.A.T @ inst.b
    nz = np.flatnonzero(corr)
    if nz.size == 0:
        raise ValueError("A^T b vanishes: no admissible one-sparse start")
    j0 = int(nz[0])
    aj = inst.A[:, j0]
    x0 = np.zeros(inst.n)
    x0[j0] = np.sign(corr[j0]) * min(abs(corr[j0]) / float(aj @ aj), inst.box.upper[j0])
    F0 = eval_F(inst.problem(), x0)
    bound = 1.0 + 0.5 * inst.lam * float(inst.b @ inst.b)
    if not (F0.is_finite and F0.value < bound):
        raise ValueError(f"one-sparse start violates F(x0) < {bound}")
    return x0


def save_instance(inst, path):
    """Binary container plus a ``key=value`` manifest next to it."""
    path = Path(path)
    header = _HEADER.pack(
        MAGIC, FORMAT_VERSION, _MODEL_TAGS[inst.model], inst.m, inst.n, inst.r,
        inst.D, inst.lam, inst.K, int(inst.seed) & 0xFFFFFFFFFFFFFFFF,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        for arr in (inst.A, inst.b, inst.x_true, inst.box.lower, inst.box.upper):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes(order="C"))
    manifest = {
        "format": f"{MAGIC.decode()} v{FORMAT_VERSION}",
        "model": inst.model, "m": inst.m, "n": inst.n, "r": inst.r, "D": repr(inst.D),
        "lambda": repr(inst.lam), "K": inst.K, "seed": inst.seed,
        **{k: v for k, v in inst.meta.items()},
    }
    Path(str(path) + ".manifest").write_text("".join(f"{k}={v}\n" for k, v in manifest.items()))
    return path


def load_instance(path):
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError("file too short for an instance header")
    magic, version, tag, m, n, r, D, lam, K, seed = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError("bad magic: not an instance file")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported instance format version {version}")
    model = {v: k for k, v in _MODEL_TAGS.items()}.get(tag)
    if model is None:
        raise ValueError(f"unknown model tag {tag}")
    expected = _HEADER.size + 8 * (m * n + m + 3 * n)
    if len(data) != expected:
        raise ValueError(f"payload size mismatch: {len(data)} bytes, expected {expected}")
    payload = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    A = payload[: m * n].reshape(m, n).copy()
    rest = payload[m * n:]
    b, x_true, lower, upper = rest[:m].copy(), rest[m:m + n].copy(), rest[m + n:m + 2 * n].copy(), rest[m + 2 * n:].copy()
    if seed >= 1 << 63:
        seed -= 1 << 64
    return Instance(model, A, b, x_true, BoxBounds(lower, upper), lam, D, int(K), int(seed), int(r))
