"""Batch experiments over random instances and CSV output."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .criticality import StoppingRule, rel_err
from .instances import L1L2, L1SK, init_point, make_l1l2_instance, make_l1sk_instance
from .solver import Schedule, SolverConfig, Termination, solve

log = logging.getLogger(__name__)

COLUMNS = [
    "kind", "model", "m", "n", "r", "D", "lambda", "algorithm", "N", "M", "seed",
    "epochs", "wall_time_sec", "final_objective", "termination", "final_residual", "success_rate",
]
ERROR = "Error"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Algorithm:
    schedule: str  # "cmpga" | "rmpga"
    N: int
    M: int = 2

    @property
    def label(self):
        return f"{self.schedule.upper()}(N={self.N},M={self.M})"


@dataclass
class ExperimentSpec:
    model: str
    grid: list  # (m, n, r, D, lam) tuples
    algorithms: list  # Algorithm
    instances_per_cell: int = 50
    base_seed: int = 0
    output: str = "results.csv"
    K: int = 0  # 0 means K = r
    tol: float = 0.0  # 0 means the model default
    max_epochs: int = 5000

    def __post_init__(self):
        if self.model not in (L1L2, L1SK):
            raise ConfigError(f"model must be {L1L2} or {L1SK}, got {self.model!r}")
        if self.instances_per_cell < 1:
            raise ConfigError("instances_per_cell must be >= 1")
        for cell in self.grid:
            if len(cell) != 5:
                raise ConfigError(f"grid cells are (m, n, r, D, lambda), got {cell!r}")
            for alg in self.algorithms:
                if not 1 <= alg.N <= cell[1]:
                    raise ConfigError(f"need 1 <= N <= n, got N={alg.N} for n={cell[1]}")
        for alg in self.algorithms:
            if alg.schedule not in ("cmpga", "rmpga") or alg.M < 0:
                raise ConfigError(f"bad algorithm {alg!r}")


def derive_seed(base_seed, cell, instance):
    digest = hashlib.blake2b(f"{cell}:{instance}".encode(), digest_size=8).digest()
    return (int(base_seed) ^ int.from_bytes(digest, "little")) & ((1 << 63) - 1)


def experiment_config(inst, schedule="cmpga", N=8, M=2, seed=0, *, sigma=1e-6, gamma=0.5,
                 alpha_y=1000.0, alpha_cap=1e8, max_epochs=5000, stop=None, tol=None):
    """Solver settings used by the benchmark experiments for ``inst``.

    L1/SK: BB floor and initial step ``1.99/(lam ||A||^2)``, stop on relative
    error to the ground truth. L1/L2: floor ``1e-8``, initial step 1, stop on
    the scaled subdifferential distance.
    """
    if inst.model == L1SK:
        floor = 1.99 / (inst.lam * float(np.linalg.norm(inst.A, 2)) ** 2)
        init = floor
        stop = stop or "relerr"
    else:
        floor, init = 1e-8, 1.0
        stop = stop or "residual"
    if stop == "relerr":
        rule = StoppingRule.relerr(inst.x_true, tol or 1e-3)
    elif stop == "residual":
        if inst.model != L1L2:
            raise ConfigError("the residual stop rule is only available for L1/L2")
        rule = StoppingRule.subdiff(tol or 1e-7)
    else:
        raise ConfigError(f"unknown stop rule {stop!r}")
    sched = Schedule.cyclic() if schedule == "cmpga" else Schedule.randomized()
    return SolverConfig(
        M=M, sigma=sigma, gamma=gamma, alpha_lo=min(floor, alpha_y), alpha_hi=alpha_cap,
        alpha_y=alpha_y, schedule=sched, seed=seed, max_epochs=max_epochs, stop_rule=rule,
        bb_floor=floor, bb_init=init,
    )


def _make_instance(model, cell, K, seed):
    m, n, r, D, lam = cell
    if model == L1SK:
        return make_l1sk_instance(m, n, r, D, lam, K or None, seed)
    return make_l1l2_instance(m, n, r, D, lam, seed)


def _run_cell_instance(task):
    spec, ci, ii = task
    cell = spec.grid[ci]
    m, n, r, D, lam = cell
    seed = derive_seed(spec.base_seed, ci, ii)
    base = dict(kind="instance", model=spec.model, m=m, n=n, r=r, D=D, **{"lambda": lam}, seed=seed)
    rows = []
    try:
        inst = _make_instance(spec.model, cell, spec.K, seed)
        x0 = init_point(inst)
    except Exception as exc:  # recorded, never fatal for the batch
        log.warning("instance %s/%s failed: %s", ci, ii, exc)
        for alg in spec.algorithms:
            rows.append(dict(base, algorithm=alg.label, N=alg.N, M=alg.M, termination=ERROR))
        return rows
    for alg in spec.algorithms:
        row = dict(base, algorithm=alg.label, N=alg.N, M=alg.M)
        try:
            cfg = experiment_config(inst, alg.schedule, alg.N, alg.M, seed,
                               max_epochs=spec.max_epochs, tol=spec.tol or None)
            rep = solve(inst.problem(alg.N), x0, cfg)
            row.update(epochs=rep.epochs, wall_time_sec=rep.wall_time,
                       final_objective=rep.final_objective, termination=rep.termination.value,
                       final_residual=rep.final_measure)
        except Exception as exc:
            log.warning("solve %s/%s %s failed: %s", ci, ii, alg.label, exc)
            row.update(termination=ERROR)
        rows.append(row)
    return rows


def run_experiment(spec, jobs=1):
    """Per-instance rows in (cell, instance, algorithm) order, plus per-cell means."""
    tasks = [(spec, ci, ii) for ci in range(len(spec.grid)) for ii in range(spec.instances_per_cell)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_cell_instance, tasks))
    else:
        chunks = [_run_cell_instance(t) for t in tasks]
    rows = [row for chunk in chunks for row in chunk]
    return rows, aggregate(rows)


def _ok(row):
    return row.get("termination") not in (ERROR, Termination.MAX_EPOCHS.value, None)


def aggregate(rows):
    """Group by (cell, algorithm): mean epochs, time and objective over the
    successful rows, and the success rate."""
    groups = OrderedDict()
    for row in rows:
        key = tuple(row[k] for k in ("model", "m", "n", "r", "D", "lambda", "algorithm", "N", "M"))
        groups.setdefault(key, []).append(row)
    out = []
    for key, members in groups.items():
        good = [r for r in members if _ok(r)]

        def mean(col):
            return float(np.mean([r[col] for r in good])) if good else math.nan

        out.append(dict(
            zip(("model", "m", "n", "r", "D", "lambda", "algorithm", "N", "M"), key),
            kind="mean", epochs=mean("epochs"), wall_time_sec=mean("wall_time_sec"),
            final_objective=mean("final_objective"), final_residual=mean("final_residual"),
            success_rate=len(good) / len(members),
        ))
    return out


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def write_csv(path, rows, summary=()):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for row in list(rows) + list(summary):
            w.writerow([_fmt(row.get(c)) for c in COLUMNS])


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _parse_algorithms(items):
    algs = []
    for item in items:
        if isinstance(item, str):
            parts = [p.strip() for p in item.split(":")]
        else:
            parts = list(item)
        try:
            sched = str(parts[0]).lower()
            N = int(parts[1])
            M = int(parts[2]) if len(parts) > 2 else 2
        except (IndexError, ValueError) as exc:
            raise ConfigError(f"bad algorithm entry {item!r}: expected schedule:N[:M]") from exc
        algs.append(Algorithm(sched, N, M))
    return algs


def _parse_grid(items):
    grid = []
    for item in items:
        parts = [p.strip() for p in item.split(",")] if isinstance(item, str) else list(item)
        if len(parts) != 5:
            raise ConfigError(f"bad grid cell {item!r}: expected m,n,r,D,lambda")
        try:
            grid.append((int(parts[0]), int(parts[1]), int(parts[2]), float(parts[3]), float(parts[4])))
        except ValueError as exc:
            raise ConfigError(f"bad grid cell {item!r}") from exc
    return grid


def load_spec(path):
    """Read an experiment from JSON or from ``key = value`` lines.

    In the line format ``grid`` and ``algorithms`` hold ``;``-separated
    entries, e.g. ``grid = 640,5400,100,10,200`` and
    ``algorithms = cmpga:1:2; cmpga:8:2; rmpga:8:2``.
    """
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(str(exc)) from exc
    else:
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value")
            k, v = line.split("=", 1)
            raw[k.strip()] = v.strip()
        for k in ("grid", "algorithms"):
            if k in raw:
                raw[k] = [p for p in (s.strip() for s in raw[k].split(";")) if p]
    known = {"model", "grid", "algorithms", "instances_per_cell", "base_seed", "output", "K", "tol", "max_epochs"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    if "model" not in raw:
        raise ConfigError("missing key: model")
    try:
        return ExperimentSpec(
            model=str(raw["model"]).upper(),
            grid=_parse_grid(raw.get("grid", [])),
            algorithms=_parse_algorithms(raw.get("algorithms", [])),
            instances_per_cell=int(raw.get("instances_per_cell", 50)),
            base_seed=int(raw.get("base_seed", 0)),
            output=str(raw.get("output", "results.csv")),
            K=int(raw.get("K", 0)),
            tol=float(raw.get("tol", 0.0)),
            max_epochs=int(raw.get("max_epochs", 5000)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
