"""Command-line driver: ``gen``, ``solve``, ``bench`` and ``verify``."""
from __future__ import annotations

import argparse
import logging
import sys

from .bench import ERROR, ConfigError, load_spec, experiment_config, run_experiment, write_csv
from .criticality import rel_err
from .instances import L1L2, L1SK, init_point, load_instance, make_l1l2_instance, make_l1sk_instance, save_instance

EXIT_OK, EXIT_ERROR_ROWS, EXIT_CONFIG = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _build_parser():
    p = _Parser(prog="mpga", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate an instance file")
    g.add_argument("--model", choices=["l1sk", "l1l2"], required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--r", type=int, required=True)
    g.add_argument("--D", type=float, required=True)
    g.add_argument("--lam", type=float, required=True)
    g.add_argument("--K", type=int, default=None, help="K-norm order (L1/SK, default r)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    s = sub.add_parser("solve", help="solve one instance file")
    s.add_argument("instance")
    s.add_argument("--algo", choices=["cmpga", "rmpga"], default="cmpga")
    s.add_argument("--blocks", type=int, default=8)
    s.add_argument("--memory", type=int, default=2)
    s.add_argument("--sigma", type=float, default=1e-6)
    s.add_argument("--gamma", type=float, default=0.5)
    s.add_argument("--alpha-y", type=float, default=1000.0)
    s.add_argument("--alpha-cap", type=float, default=1e8)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-epochs", type=int, default=5000)
    s.add_argument("--stop", choices=["relerr", "residual"], default=None)
    s.add_argument("--tol", type=float, default=None)

    b = sub.add_parser("bench", help="run an experiment config")
    b.add_argument("config")
    b.add_argument("--out", default=None)
    b.add_argument("--jobs", type=int, default=1)

    v = sub.add_parser("verify", help="run the invariant checks on an instance file")
    v.add_argument("instance")
    v.add_argument("--seed", type=int, default=0)
    return p


def _cmd_gen(a):
    if a.model == "l1sk":
        inst = make_l1sk_instance(a.m, a.n, a.r, a.D, a.lam, a.K, a.seed)
    else:
        inst = make_l1l2_instance(a.m, a.n, a.r, a.D, a.lam, a.seed)
    path = save_instance(inst, a.out)
    print(f"wrote {path} ({inst.model}, m={inst.m}, n={inst.n}, r={inst.r}, "
          f"certificate={inst.certificate():.3e})")
    return EXIT_OK


def _cmd_solve(a):
    from .solver import solve

    inst = load_instance(a.instance)
    if not 1 <= a.blocks <= inst.n:
        raise ConfigError(f"--blocks must lie in [1, {inst.n}]")
    cfg = experiment_config(inst, a.algo, a.blocks, a.memory, a.seed, sigma=a.sigma, gamma=a.gamma,
                       alpha_y=a.alpha_y, alpha_cap=a.alpha_cap, max_epochs=a.max_epochs,
                       stop=a.stop, tol=a.tol)
    rep = solve(inst.problem(a.blocks), init_point(inst), cfg)
    print(f"termination={rep.termination.value} epochs={rep.epochs} iterations={rep.iterations}")
    print(f"objective={rep.final_objective:.17g} stop_measure={rep.final_measure:.6g} "
          f"rel_err={rel_err(rep.final_x, inst.x_true):.6g} wall_time_sec={rep.wall_time:.4f}")
    return EXIT_OK


def _cmd_bench(a):
    spec = load_spec(a.config)
    if a.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    out = a.out or spec.output
    rows, summary = run_experiment(spec, jobs=a.jobs)
    write_csv(out, rows, summary)
    for row in summary:
        print(f"{row['model']} m={row['m']} n={row['n']} r={row['r']} D={row['D']} "
              f"{row['algorithm']}: epochs={row['epochs']:.1f} time={row['wall_time_sec']:.3f}s "
              f"objective={row['final_objective']:.6g} success={row['success_rate']:.2f}")
    print(f"wrote {out}")
    return EXIT_ERROR_ROWS if any(r.get("termination") == ERROR for r in rows) else EXIT_OK


def _cmd_verify(a):
    from .verify import run_checks

    inst = load_instance(a.instance)
    results = run_checks(inst, seed=a.seed)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_ERROR_ROWS


def main(argv=None):
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"gen": _cmd_gen, "solve": _cmd_solve, "bench": _cmd_bench, "verify": _cmd_verify}[args.cmd]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"mpga: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print(f"mpga: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if args.cmd in ("gen", "bench") else EXIT_ERROR_ROWS


if __name__ == "__main__":
    sys.exit(main())
