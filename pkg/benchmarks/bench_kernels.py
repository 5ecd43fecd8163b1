"""Time the hot kernels and one solve with numba on and off.

Each mode runs in its own interpreter because the backend is fixed at
import time by ``MPGA_DISABLE_NUMBA``.

    python benchmarks/bench_kernels.py [--repeat 20] [--n 5400]
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _best(fn, repeat):
    fn()  # warm-up (includes JIT compilation)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def _measure(n, repeat):
    from mpga import kernels
    from mpga._accel import HAVE_NUMBA
    from mpga.bench import experiment_config
    from mpga.instances import init_point, make_l1sk_instance
    from mpga.prox import prox_knorm
    from mpga.solver import solve

    rng = np.random.default_rng(0)
    z = rng.standard_normal(n) * 3
    lo, hi = np.full(n, -2.0), np.full(n, 2.0)
    x = kernels.soft_clip(z, 0.5, lo, hi)
    out = {
        "backend": "numba" if HAVE_NUMBA else "numpy",
        "prox_knorm": _best(lambda: prox_knorm(z, 1.0, 100), repeat),
        "soft_clip": _best(lambda: kernels.soft_clip(z, 0.5, lo, hi), repeat),
        "l1_box_value": _best(lambda: kernels.l1_box_value(x, lo, hi), repeat),
        "l1_box_gap": _best(lambda: kernels.l1_box_gap(z, x, lo, hi, 1e-12), repeat),
    }
    inst = make_l1sk_instance(640, n, 100, 10.0, 200.0, seed=0)
    problem, x0 = inst.problem(8), init_point(inst)
    cfg = experiment_config(inst, "cmpga", 8, 2, 0)
    solve(problem, x0, cfg)
    t0 = time.perf_counter()
    rep = solve(problem, x0, cfg)
    out["solve"] = time.perf_counter() - t0
    out["solve_epochs"] = rep.epochs
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--n", type=int, default=5400)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.child:
        print(json.dumps(_measure(args.n, args.repeat)))
        return
    results = []
    for flag in ("0", "1"):
        env = dict(os.environ, MPGA_DISABLE_NUMBA=flag)
        cmd = [sys.executable, __file__, "--child", "--n", str(args.n), "--repeat", str(args.repeat)]
        proc = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
        results.append(json.loads(proc.stdout.strip().splitlines()[-1]))
    fast, slow = results
    print(f"{'kernel':<14}{fast['backend']:>12}{slow['backend']:>12}{'speedup':>10}")
    for key in ("prox_knorm", "soft_clip", "l1_box_value", "l1_box_gap", "solve"):
        a, b = fast[key], slow[key]
        print(f"{key:<14}{a * 1e3:>10.3f}ms{b * 1e3:>10.3f}ms{b / a:>9.1f}x")
    print(f"solve epochs: {fast['solve_epochs']} vs {slow['solve_epochs']}")


if __name__ == "__main__":
    main()
