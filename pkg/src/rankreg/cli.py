"""Command line front end.

Four subcommands:

solve
    Fit one problem from CSV/JSON files, write the solution as JSON.
select-lambda
    Run the permutation simulation and print the chosen penalty level.
simulate
    Generate synthetic replicates, solve each, report scores.
bench
    Time the solver over a grid of dimensions.

Exit codes: 0 success, 1 bad input or I/O, 2 solver did not converge.
Set RANKREG_LOG=1 for per-iteration progress on standard error.
"""

import argparse
import json
import sys
import time
from dataclasses import asdict

import numpy as np

from .model import GroupStructure, ProblemData, SolverOptions
from .lambda_rule import (LambdaConfig, select_lambda, simulate_dual_norms,
                          quantile_index)
from .palm import palm_solve
from .datagen import (DesignSpec, SignalSpec, NoiseSpec, read_csv_matrix,
                      read_groups_json)
from .metrics import run_replications, run_single_replicate, reports_to_csv


def _parse_lambda(text):
    if text == "auto":
        return "auto"
    return float(text)


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError("cannot serialize %r" % type(obj))


def _dump_json(payload, path):
    text = json.dumps(payload, indent=2, default=_json_default)
    if path is None:
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _write_text(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _apply_weights(G, spec):
    """Rebuild G with the weights named by --weights.

    None keeps whatever the structure already carries, "ones" and
    "sqrt" are the unit and sqrt-group-size conventions, anything else
    is read as a file of g numbers.
    """
    if spec is None:
        return G
    if spec == "ones":
        return GroupStructure(G.groups, np.ones(G.g))
    if spec == "sqrt":
        return GroupStructure(G.groups, np.sqrt(G.sizes.astype(float)))
    return GroupStructure(G.groups, np.loadtxt(spec, dtype=float).ravel())


def _solver_options(args):
    return SolverOptions(lam=args.lam, tol=args.tol, sigma0=args.sigma0,
                         tau=args.tau, newton_strategy=args.strategy,
                         max_outer=args.max_outer, seed=args.seed)


def _sim_groups(args):
    G = GroupStructure.contiguous(args.p, args.group_size)
    return _apply_weights(G, args.weights)


def cmd_solve(args):
    X = read_csv_matrix(args.data)
    y = read_csv_matrix(args.response).ravel()
    G = _apply_weights(read_groups_json(args.groups), args.weights)
    data = ProblemData(X, y, G)
    opts = _solver_options(args)
    if opts.lam == "auto":
        cfg = LambdaConfig(c0=args.c0, alpha0=args.alpha0,
                           reps=args.lambda_reps, seed=args.seed)
        lam = select_lambda(X, G, cfg)
    else:
        lam = float(opts.lam)
    t0 = time.perf_counter()
    sol = palm_solve(data, lam, opts)
    wall = time.perf_counter() - t0
    nz = np.flatnonzero(G.norms(sol.beta) > 0)
    payload = {
        "lambda": float(sol.lam),
        "n": data.n, "p": data.p,
        "beta": sol.beta.tolist(),
        "s": sol.s.tolist(),
        "w": sol.w.tolist(),
        "nonzero_groups": (nz + 1).tolist(),
        "eta_kkt": float(sol.eta_kkt),
        "eta_p": float(sol.eta_p),
        "eta_d": float(sol.eta_d),
        "pobj": float(sol.pobj),
        "dobj": float(sol.dobj),
        "relgap": float(sol.relgap),
        "dual_infeas": float(sol.dual_infeas),
        "iters": sol.outer_iters,
        "newton_iters": sol.total_newton_iters,
        "time": wall,
        "converged": sol.converged,
    }
    _dump_json(payload, args.out)
    return 0 if sol.converged else 2


def cmd_select_lambda(args):
    X = read_csv_matrix(args.data)
    G = _apply_weights(read_groups_json(args.groups), args.weights)
    cfg = LambdaConfig(c0=args.c0, alpha0=args.alpha0, reps=args.reps,
                       seed=args.seed)
    vals = simulate_dual_norms(X, G, cfg)
    q = float(np.sort(vals)[quantile_index(cfg.alpha0, cfg.reps)])
    lam = cfg.c0 * q
    print("lambda %s" % repr(lam))
    print("quantile %s" % repr(q))
    if args.out is not None:
        _write_text("".join(repr(float(v)) + "\n" for v in vals), args.out)
    return 0


def cmd_simulate(args):
    design = DesignSpec(args.design, args.n, args.p)
    signal = SignalSpec(args.signal)
    noise = NoiseSpec(args.noise)
    G = _sim_groups(args)
    opts = _solver_options(args)
    lam_cfg = LambdaConfig(c0=args.c0, alpha0=args.alpha0,
                           reps=args.lambda_reps)
    reports, agg = run_replications(
        design, signal, noise, G, opts=opts, lam_cfg=lam_cfg,
        reps=args.reps, seed=args.seed, jobs=args.jobs,
        zero_tol=args.zero_tol)
    payload = {
        "design": args.design, "signal": args.signal, "noise": args.noise,
        "n": args.n, "p": args.p, "group_size": args.group_size,
        "reps": args.reps, "seed": args.seed,
        "lambda": args.lam if args.lam == "auto" else float(args.lam),
        "aggregate": agg,
        "replicates": [asdict(r) for r in reports],
    }
    print(json.dumps(payload, indent=2, default=_json_default))
    if args.out is not None:
        _write_text(reports_to_csv(reports), args.out)
    return 0


def cmd_bench(args):
    grid = sorted(int(tok) for tok in args.p_grid.split(",") if tok)
    if not grid:
        raise ValueError("empty --p-grid")
    signal = SignalSpec(args.signal)
    noise = NoiseSpec(args.noise)
    opts = _solver_options(args)
    lam_cfg = LambdaConfig(c0=args.c0, alpha0=args.alpha0,
                           reps=args.lambda_reps)
    lines = ["p,n,lambda,solve_time,converged"]
    for i, p in enumerate(grid):
        design = DesignSpec(args.design, args.n, p)
        G = GroupStructure.contiguous(p, args.group_size)
        G = _apply_weights(G, args.weights)
        rep = run_single_replicate(design, signal, noise, G, opts=opts,
                                   lam_cfg=lam_cfg, seed=args.seed,
                                   replicate=i)
        lines.append("%d,%d,%s,%s,%d" % (p, args.n, repr(rep.lambda_used),
                                         repr(rep.solve_time),
                                         int(rep.converged)))
        if args.verbose:
            print("bench p=%d time=%.3fs" % (p, rep.solve_time),
                  file=sys.stderr)
    _write_text("\n".join(lines) + "\n", args.out)
    return 0


def _add_solver_flags(sp):
    sp.add_argument("--lambda", dest="lam", type=_parse_lambda,
                    default="auto",
                    help="penalty level, 'auto' or a number")
    sp.add_argument("--tol", type=float, default=1e-6,
                    help="KKT residual tolerance")
    sp.add_argument("--sigma0", type=float, default=1.0,
                    help="initial penalty parameter")
    sp.add_argument("--tau", type=float, default=1.0,
                    help="proximal term weight")
    sp.add_argument("--strategy", default="auto",
                    choices=["auto", "direct", "cg", "woodbury"],
                    help="Newton linear system strategy")
    sp.add_argument("--max-outer", type=int, default=100,
                    help="outer iteration cap")


def _add_lambda_flags(sp, reps_flag=False):
    sp.add_argument("--c0", type=float, default=1.01,
                    help="safety factor on the simulated quantile")
    sp.add_argument("--alpha0", type=float, default=0.1,
                    help="upper tail mass of the quantile")
    if reps_flag:
        sp.add_argument("--reps", type=int, default=500,
                        help="number of simulated permutations")
    else:
        sp.add_argument("--lambda-reps", type=int, default=500,
                        help="permutations for the auto penalty rule")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rankreg",
        description="Group-penalized rank regression solver.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="fit one problem from files")
    sp.add_argument("--data", required=True, help="CSV design matrix")
    sp.add_argument("--response", required=True, help="CSV response vector")
    sp.add_argument("--groups", required=True, help="JSON group file, "
                    "1-based column indices")
    sp.add_argument("--weights", default=None,
                    help="ones, sqrt, or a file of group weights "
                    "(default: weights from the group file, else ones)")
    _add_solver_flags(sp)
    _add_lambda_flags(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None, help="JSON output path "
                    "(default stdout)")
    sp.add_argument("--print-config", action="store_true")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("select-lambda", help="simulate the penalty level")
    sp.add_argument("--data", required=True, help="CSV design matrix")
    sp.add_argument("--groups", required=True, help="JSON group file")
    sp.add_argument("--weights", default=None)
    _add_lambda_flags(sp, reps_flag=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None,
                    help="write all simulated values, one per line")
    sp.add_argument("--print-config", action="store_true")
    sp.set_defaults(func=cmd_select_lambda)

    sp = sub.add_parser("simulate", help="replicate study on synthetic data")
    sp.add_argument("--design", default="C1", choices=["C1", "C2", "C3"])
    sp.add_argument("--signal", default="S1",
                    choices=["S1", "S2", "S3", "S4"])
    sp.add_argument("--noise", default="E2",
                    choices=["E1", "E2", "E3", "E4", "E5", "E6"])
    sp.add_argument("--n", type=int, default=200)
    sp.add_argument("--p", type=int, default=2000)
    sp.add_argument("--group-size", type=int, default=20)
    sp.add_argument("--weights", default="sqrt",
                    help="ones, sqrt, or a weight file (default sqrt)")
    sp.add_argument("--reps", type=int, default=10,
                    help="number of replicates")
    sp.add_argument("--jobs", type=int, default=1,
                    help="worker threads for replicates")
    sp.add_argument("--zero-tol", type=float, default=1e-8)
    _add_solver_flags(sp)
    _add_lambda_flags(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None,
                    help="also write a per-replicate CSV here")
    sp.add_argument("--print-config", action="store_true")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("bench", help="time the solver over a size grid")
    sp.add_argument("--p-grid", required=True,
                    help="comma separated dimensions, e.g. 2000,4000,8000")
    sp.add_argument("--n", type=int, default=500)
    sp.add_argument("--design", default="C1", choices=["C1", "C2", "C3"])
    sp.add_argument("--signal", default="S3",
                    choices=["S1", "S2", "S3", "S4"])
    sp.add_argument("--noise", default="E2",
                    choices=["E1", "E2", "E3", "E4", "E5", "E6"])
    sp.add_argument("--group-size", type=int, default=20)
    sp.add_argument("--weights", default="sqrt")
    _add_solver_flags(sp)
    _add_lambda_flags(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--verbose", action="store_true",
                    help="progress per grid point on stderr")
    sp.add_argument("--out", default=None, help="CSV output path "
                    "(default stdout)")
    sp.add_argument("--print-config", action="store_true")
    sp.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.print_config:
        cfg = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
        print(json.dumps(cfg, default=str), file=sys.stderr)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
