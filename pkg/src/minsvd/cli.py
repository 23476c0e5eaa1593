"""``minsvd`` command line: gen, solve, compare, predict, aaa.

Exit status: 0 success, 2 I/O, usage or invalid-argument error, 3 dimension error,
4 non-convergence, 5 internal error. Every artifact starts with a
reproducibility header naming the tool version, seed and full option set.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .baselines import PrecondKind, lanczos_gk, lobpcg_generic
from .errors import ConvergenceError, DimensionError, MatrixMarketError, MinSvdError
from .matgen import PRESETS, preset
from .mmio import read_matrix_market, write_matrix_market
from .precond import sketch_and_solve_init
from .rational import (
    aaa_fit, eval_barycentric, lawson_refine, max_error, sign_re,
    twin_circles,
)
from .solver import SolverOptions, Truth, prepare_preconditioner, rlobpcg_block, rlobpcg_single
from .theory import angle_bounds, iteration_estimate, predicted_rate

EXIT_IO, EXIT_DIM, EXIT_NOCONV, EXIT_INTERNAL = 2, 3, 4, 5
METHODS = ("rlobpcg", "lobpcg_none", "lobpcg_diag", "lanczos")


class _UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return v


def _config(args):
    """JSON-able option set, excluding bookkeeping fields."""
    skip = {"func", "out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _header(args):
    return [
        f"minsvd {__version__}",
        f"seed={args.seed}",
        "options=" + json.dumps(_config(args), sort_keys=True),
    ]


def _out_dir(args):
    if args.out is None:
        return None
    p = Path(args.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _emit(args, summary, name="summary.json"):
    out = _out_dir(args)
    if out is not None:
        _write_json(out / name, summary)
    print(json.dumps(summary, indent=2, sort_keys=True))


def _solver_options(args, block=False):
    return SolverOptions(
        tol=args.tol, max_iter=args.max_iter, check_every=args.check_every,
        stagnation=not args.no_stagnation, block_size=args.block if block else 1,
        seed=args.seed, sketch_dim=args.sketch_dim, zeta=args.zeta,
    )


def _load_problem(args):
    """``(A, truth, source)`` from ``--input`` or ``--gen``."""
    if (args.input is None) == (args.gen is None):
        raise _UsageError("give exactly one of --input or --gen")
    truth = None
    if args.input is not None:
        A = read_matrix_market(args.input)
        source = {"input": str(args.input)}
    else:
        prob = preset(args.gen, m=args.m, n=args.n, seed=args.seed)
        A, truth = prob.A, prob.truth
        source = {"gen": args.gen, "m": prob.m, "n": int(prob.sigma.size)}
    if args.truth is not None:
        truth = _read_truth(args.truth)
    if truth is not None and truth.v_min.size != A.shape[1]:
        raise DimensionError(f"truth vector has length {truth.v_min.size}, matrix has {A.shape[1]} columns")
    return A, truth, source


def _read_truth(path):
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    try:
        return Truth(float(obj["sigma"][-1]), np.asarray(obj["v_min"], dtype=float))
    except (KeyError, TypeError, IndexError) as exc:
        raise MatrixMarketError(f"{path}: truth sidecar needs 'sigma' and 'v_min' ({exc})") from None


def _record_summary(rec, sigma):
    return {
        "method": rec.method,
        "sigma": sigma,
        "iterations": rec.iterations,
        "matvecs_A": rec.matvecs_A,
        "matvecs_At": rec.matvecs_At,
        "converged": rec.converged,
        "status": rec.status,
    }


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_gen(args):
    prob = preset(args.gen, m=args.m, n=args.n, seed=args.seed)
    out = _out_dir(args) or Path(".")
    header = _header(args)
    write_matrix_market(out / "A.mtx", prob.A, comments=header)
    truth = {
        "version": __version__, "seed": args.seed, "options": _config(args),
        "preset": args.gen, "kind": prob.spec.kind, "m": prob.m, "n": int(prob.sigma.size),
        "coherent": prob.coherent,
        "sigma": [float(s) for s in prob.sigma],
        "v_min": [float(x) for x in prob.v_min],
        "gap": prob.gap, "gap_abs": prob.gap_abs, "kappa": prob.kappa,
    }
    _write_json(out / "truth.json", truth)
    print(json.dumps({"matrix": str(out / "A.mtx"), "truth": str(out / "truth.json"),
                      "shape": [prob.m, int(prob.sigma.size)]}, sort_keys=True))
    return 0


def cmd_solve(args):
    A, truth, source = _load_problem(args)
    block = args.block > 1
    opts = _solver_options(args, block)
    if block:
        V, sigma, rec = rlobpcg_block(A, opts, truth)
        sigma_out = [float(s) for s in sigma]
    else:
        v, sigma, rec = rlobpcg_single(A, opts, truth)
        sigma_out = float(sigma)
    out = _out_dir(args)
    if out is not None:
        rec.to_csv(out / f"{rec.method}.csv", timing=args.timing, header_lines=_header(args))
    summary = {"version": __version__, "seed": args.seed, "options": _config(args),
               "shape": list(A.shape), **source, **_record_summary(rec, sigma_out),
               "block_size": args.block}
    _emit(args, summary)
    return 0 if rec.converged else EXIT_NOCONV


def cmd_compare(args):
    A, truth, source = _load_problem(args)
    opts = _solver_options(args)
    methods = args.methods.split(",")
    unknown = sorted(set(methods) - set(METHODS))
    if unknown:
        raise _UsageError(f"unknown methods {unknown}; choose from {list(METHODS)}")
    out = _out_dir(args)
    results = {}
    for method in methods:
        if method == "lanczos":
            # same sketch-and-solve start vector as the LOBPCG variants
            P, _ = prepare_preconditioner(A, opts)
            v0 = sketch_and_solve_init(P, 1)[:, 0]
            iters = min(opts.resolved(A.shape[1]).max_iter, A.shape[1])
            _, sigma, rec = lanczos_gk(A, max(iters, 1), v0, truth)
        else:
            kind = {"rlobpcg": PrecondKind.RANDOMIZED, "lobpcg_none": PrecondKind.NONE,
                    "lobpcg_diag": PrecondKind.DIAGONAL}[method]
            _, sigma, rec = lobpcg_generic(A, kind, opts, truth)
        if out is not None:
            rec.to_csv(out / f"{method}.csv", timing=args.timing, header_lines=_header(args))
        results[method] = _record_summary(rec, float(sigma))
    summary = {"version": __version__, "seed": args.seed, "options": _config(args),
               "shape": list(A.shape), **source, "methods": results}
    _emit(args, summary)
    return 0


def cmd_predict(args):
    rate = predicted_rate(args.eta, args.gap)
    print(f"q = {rate.q:.10g}")
    print(f"gamma = {rate.gamma:.10g}")
    print(f"hypothesis eta < gap/(2+gap): {rate.hypothesis_holds}")
    if rate.C is not None:
        print(f"C = {rate.C:.10g}")
        if args.eps is not None:
            print(f"iterations for eps={args.eps:g}: {iteration_estimate(args.eta, args.gap, args.eps)}")
    if args.eps is not None:
        print(f"iterations for eps={args.eps:g} (eta = min(gap/3, 1/6)): {iteration_estimate(None, args.gap, args.eps)}")
    if args.av_sq is not None:
        if args.sigma_n is None or args.sigma_nm1 is None:
            raise _UsageError("--av-sq needs --sigma-n and --sigma-nm1")
        s, t = angle_bounds(args.av_sq, args.sigma_n, args.sigma_nm1)
        print(f"sin bound = {s:.10g}")
        print(f"tan bound = {t:.10g}")
    return 0


def _read_samples(path):
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                vals = [float(x) for x in row]
            except ValueError:
                if not rows:  # header line
                    continue
                raise MatrixMarketError(f"{path}: bad number", lineno) from None
            if len(vals) != 4:
                raise MatrixMarketError(f"{path}: expected 4 columns re(z), im(z), re(f), im(f)", lineno)
            rows.append(vals)
    if not rows:
        raise MatrixMarketError(f"{path}: no samples")
    a = np.array(rows)
    return a[:, 0] + 1j * a[:, 1], a[:, 2] + 1j * a[:, 3]


def cmd_aaa(args):
    if args.input is not None:
        Z, F = _read_samples(args.input)
        source = {"input": str(args.input)}
    else:
        Z = twin_circles(args.points, args.center)
        F = sign_re(Z)
        source = {"function": "z*sign(Re z)", "points_per_circle": args.points, "center": args.center}
    r0 = aaa_fit(Z, F, max_degree=args.degree, tol=args.aaa_tol)
    err0 = max_error(r0, Z, F)
    opts = SolverOptions(tol=1e-15 if args.tol is None else args.tol, max_iter=args.max_iter,
                         check_every=args.check_every, stagnation=args.stagnation,
                         seed=args.seed, sketch_dim=args.sketch_dim, zeta=args.zeta)
    history = []
    r = r0
    if args.lawson_steps > 0:
        r = lawson_refine(r0, Z, F, steps=args.lawson_steps, backend=args.backend, opts=opts,
                          callback=lambda s: history.append((s.iteration, s.max_error, s.best_error)))
    err = max_error(r, Z, F)
    out = _out_dir(args)
    if out is not None:
        e = eval_barycentric(r, Z) - F
        with open(out / "aaa_error.csv", "w", encoding="utf-8", newline="") as fh:
            for line in _header(args):
                fh.write(f"# {line}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["point", "re_z", "im_z", "abs_err", "arg_err"])
            for k in range(Z.size):
                w.writerow([k, repr(float(Z[k].real)), repr(float(Z[k].imag)),
                            repr(float(abs(e[k]))), repr(float(np.angle(e[k])))])
        with open(out / "lawson.csv", "w", encoding="utf-8", newline="") as fh:
            for line in _header(args):
                fh.write(f"# {line}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "max_error", "best_error"])
            for step, cur, best in history:
                w.writerow([step, repr(cur), repr(best)])
    summary = {"version": __version__, "seed": args.seed, "options": _config(args), **source,
               "samples": int(Z.size), "degree": r.degree, "aaa_max_error": err0,
               "lawson_max_error": err, "improvement": err / err0 if err0 > 0 else 1.0}
    _emit(args, summary, "aaa_summary.json")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--seed", type=_nonneg_int, default=0, help="RNG seed (default 0)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--timing", action="store_true",
                   help="fill the wall_ms CSV column (runs are then no longer byte-identical)")


def _add_solver(p, tol_help="relative residual tolerance (default 2 sqrt(n) eps)"):
    p.add_argument("--tol", type=float, default=None, help=tol_help)
    p.add_argument("--max-iter", type=_nonneg_int, default=None)
    p.add_argument("--check-every", type=_positive_int, default=5)
    p.add_argument("--sketch-dim", type=_positive_int, default=None, help="sketch rows d (default 4n)")
    p.add_argument("--zeta", type=_positive_int, default=4, help="nonzeros per sketch column")


def _add_problem(p):
    p.add_argument("--input", help="Matrix Market file")
    p.add_argument("--gen", choices=sorted(PRESETS), help="generate a preset problem instead")
    p.add_argument("--m", type=_positive_int, default=None)
    p.add_argument("--n", type=_positive_int, default=None)
    p.add_argument("--truth", help="truth sidecar JSON written by 'gen'")
    p.add_argument("--no-stagnation", action="store_true", help="stop on the residual test only")


def build_parser():
    parser = argparse.ArgumentParser(prog="minsvd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"minsvd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic matrix and its truth sidecar")
    p.add_argument("--gen", choices=sorted(PRESETS), required=True)
    p.add_argument("--m", type=_positive_int, default=None)
    p.add_argument("--n", type=_positive_int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="smallest singular triplet(s) by RLOBPCG")
    _add_problem(p)
    _add_solver(p)
    p.add_argument("--block", type=_positive_int, default=1, help="block size b (1 = single vector)")
    _add_common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("compare", help="run baselines from the same start vector")
    _add_problem(p)
    _add_solver(p)
    p.add_argument("--methods", default=",".join(METHODS), help=f"comma list from {','.join(METHODS)}")
    _add_common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("predict", help="convergence-theory quantities")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--gap", type=float, required=True)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--av-sq", type=float, default=None, help="||Av||^2 for the angle bounds")
    p.add_argument("--sigma-n", type=float, default=None)
    p.add_argument("--sigma-nm1", type=float, default=None)
    p.set_defaults(func=cmd_predict, seed=0, out=None)

    p = sub.add_parser("aaa", help="AAA-Lawson rational approximation")
    p.add_argument("--input", help="CSV of samples: re(z), im(z), re(f), im(f)")
    p.add_argument("--points", type=_positive_int, default=1000, help="samples per circle")
    p.add_argument("--center", type=float, default=1.03)
    p.add_argument("--degree", type=_nonneg_int, default=20)
    p.add_argument("--aaa-tol", type=float, default=1e-13)
    p.add_argument("--lawson-steps", type=_nonneg_int, default=20)
    p.add_argument("--backend", choices=("dense_svd", "rlobpcg"), default="rlobpcg")
    p.add_argument("--stagnation", action="store_true",
                   help="enable the stagnation stopping tests in the nullspace solves")
    _add_solver(p, tol_help="relative residual tolerance of the nullspace solves (default 1e-15)")
    _add_common(p)
    p.set_defaults(func=cmd_aaa)
    return parser


def _threads():
    raw = os.environ.get("MINSVD_THREADS")
    if not raw:
        return None
    try:
        v = int(raw)
    except ValueError:
        raise _UsageError(f"MINSVD_THREADS must be a positive integer, got {raw!r}") from None
    if v < 1:
        raise _UsageError(f"MINSVD_THREADS must be a positive integer, got {raw!r}")
    return v


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with threadpool_limits(limits=_threads()):
            return args.func(args)
    except _UsageError as exc:
        print(f"minsvd: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (OSError, MatrixMarketError, json.JSONDecodeError) as exc:
        print(f"minsvd: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DimensionError as exc:
        print(f"minsvd: dimension error: {exc}", file=sys.stderr)
        return EXIT_DIM
    except ConvergenceError as exc:
        print(f"minsvd: did not converge: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    except MinSvdError as exc:
        print(f"minsvd: error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except ValueError as exc:
        # bad option values that argparse could not catch on its own
        print(f"minsvd: invalid argument: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # pragma: no cover - last resort
        print(f"minsvd: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
