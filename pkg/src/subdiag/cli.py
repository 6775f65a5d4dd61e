"""Command-line entry point: ``subdiag <command> [flags]``.

Exit codes: 0 success, 1 a verification suite failed, 2 usage or input
error, 3 precondition violation (the error class is named on stderr and in
the JSON output).
"""
import argparse
import json
import sys

import numpy as np

from . import __version__
from .algebra import BlockPartition, SubAlg
from .beurling import beurling_extract, type_split, wandering
from .errors import DimensionError, PreconditionError
from .factor import (
    factor_in_A,
    factor_via_weighted_projection,
    inner_outer,
    inner_outer_via_projection,
    is_outer,
    lp_norm,
    riesz_factor,
    solve_in_A,
)
from .fkdet import fk_det
from .io import InputFormatError, load_algebra, load_matrix, load_subspace, matrix_to_json
from .matcore import adj, fro
from .szego import SzegoOptions, szego_l1p, szego_l2, szego_lp_general
from .verify import DEFAULT_TOL, SUITES, VERIFY_SUITES, Context, build_report

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_PRECONDITION = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if obj.ndim == 2 and obj.shape[0] == obj.shape[1]:
            return matrix_to_json(obj)
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _emit(payload, out_path=None):
    text = json.dumps(_jsonable(payload), indent=2)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    print(text)


def _exponent(text):
    if text is None:
        return None
    if text.lower() in ("inf", "infinity"):
        return float("inf")
    try:
        v = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an exponent: {text!r}") from exc
    if not v > 0:
        raise argparse.ArgumentTypeError("exponents must be positive")
    return v


def _partition(text):
    try:
        return BlockPartition.parse(text)
    except (ValueError, TypeError) as exc:
        raise argparse.ArgumentTypeError(f"bad partition {text!r}: {exc}") from exc


def _tol_override(text):
    name, sep, val = text.partition("=")
    if not sep or name not in DEFAULT_TOL:
        raise argparse.ArgumentTypeError(
            f"--tol expects NAME=VALUE with NAME in {', '.join(sorted(DEFAULT_TOL))}")
    try:
        return name, float(val)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad tolerance value {val!r}") from exc


def _add_algebra_flags(p):
    p.add_argument("--partition", type=_partition, help="block sizes, e.g. 2,1")
    p.add_argument("--algebra", metavar="FILE", help="algebra descriptor JSON")


def _add_opt_flags(p):
    p.add_argument("--opt.restarts", dest="restarts", type=int, default=8)
    p.add_argument("--opt.max-iters", dest="max_iters", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(prog="subdiag", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"subdiag {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run property suites and write a JSON report")
    v.add_argument("--suite", action="append", default=None,
                   help=f"suite name or 'all' (repeatable, comma lists allowed): "
                        f"{', '.join(VERIFY_SUITES)}")
    v.add_argument("--n", type=int)
    _add_algebra_flags(v)
    v.add_argument("--h", metavar="MATRIX", help="fixed weight for the Szego suites")
    v.add_argument("--trials", type=int)
    v.add_argument("--tol", type=_tol_override, action="append", default=[])
    v.add_argument("--p", type=_exponent)
    v.add_argument("--q", type=_exponent)
    v.add_argument("--json", metavar="OUT")
    v.add_argument("--no-timings", action="store_true", help="omit elapsed_ms for byte-stable reports")
    _add_opt_flags(v)

    d = sub.add_parser("det", help="Fuglede-Kadison determinant")
    d.add_argument("--matrix", required=True)
    d.add_argument("--json", metavar="OUT")

    f = sub.add_parser("factor", help="b = a* a with a in A")
    f.add_argument("--matrix", required=True)
    _add_algebra_flags(f)
    f.add_argument("--json", metavar="OUT")

    io = sub.add_parser("innerouter", help="f = u h, u unitary, h outer")
    io.add_argument("--matrix", required=True)
    _add_algebra_flags(io)
    io.add_argument("--json", metavar="OUT")

    o = sub.add_parser("outer", help="outer test with diagnostics")
    o.add_argument("--matrix", required=True)
    _add_algebra_flags(o)
    o.add_argument("--json", metavar="OUT")

    s = sub.add_parser("szego", help="Szego infimum for a positive weight h")
    s.add_argument("--h", "--matrix", dest="matrix", required=True)
    _add_algebra_flags(s)
    s.add_argument("--p", type=_exponent, default=2.0)
    s.add_argument("--q", type=_exponent)
    s.add_argument("--json", metavar="OUT")
    _add_opt_flags(s)

    b = sub.add_parser("beurling", help="decompose a right A-invariant subspace")
    b.add_argument("--subspace", required=True)
    _add_algebra_flags(b)
    b.add_argument("--json", metavar="OUT")

    r = sub.add_parser("riesz", help="x = y z with y, z in A")
    r.add_argument("--matrix", required=True)
    _add_algebra_flags(r)
    r.add_argument("--p", type=_exponent, required=True)
    r.add_argument("--q", type=_exponent, required=True)
    r.add_argument("--r", type=_exponent, required=True)
    r.add_argument("--eps", type=float, help="factor x + eps*1 instead (singular x)")
    r.add_argument("--json", metavar="OUT")

    e = sub.add_parser("experiment", help="exploratory searches")
    e.add_argument("name", choices=["outer-square"])
    e.add_argument("--n", type=int)
    _add_algebra_flags(e)
    e.add_argument("--trials", type=int)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--json", metavar="OUT")
    e.add_argument("--no-timings", action="store_true")
    return parser


def _algebra(args, n, inputs):
    """Algebra from --algebra or --partition; defaults to upper triangular of size n."""
    if getattr(args, "algebra", None) and getattr(args, "partition", None):
        raise UsageError("give --algebra or --partition, not both")
    if getattr(args, "algebra", None):
        alg, digest = load_algebra(args.algebra)
        inputs["algebra"] = digest
    elif getattr(args, "partition", None):
        alg = SubAlg.block_upper(args.partition)
    else:
        alg = SubAlg.block_upper(BlockPartition((1,) * n))
    if alg.n != n:
        raise DimensionError(f"algebra acts on n={alg.n}, input matrix has n={n}")
    return alg


def _matrix(source, inputs, key="matrix"):
    m, digest = load_matrix(source)
    inputs[key] = digest
    return m


def cmd_verify(args):
    names = []
    for item in args.suite or ["all"]:
        names.extend(x.strip() for x in item.split(",") if x.strip())
    unknown = [x for x in names if x != "all" and x not in SUITES]
    if unknown:
        raise UsageError(f"unknown suite(s): {', '.join(unknown)}")
    if args.algebra and args.partition:
        raise UsageError("give --algebra or --partition, not both")
    ctx = Context(seed=args.seed, n=args.n, partition=args.partition, trials=args.trials,
                  tol=dict(args.tol),
                  opts=SzegoOptions(restarts=args.restarts, max_iters=args.max_iters, seed=args.seed))
    inputs = {}
    if args.algebra:
        ctx.algebra, inputs["algebra"] = load_algebra(args.algebra)
    if args.partition and args.n and args.partition.n != args.n:
        raise UsageError(f"partition sums to {args.partition.n}, not --n {args.n}")
    if args.h:
        ctx.h = _matrix(args.h, inputs, "h")
    if args.trials is not None and args.trials < 1:
        raise UsageError("--trials must be >= 1")
    if (args.p is None) != (args.q is None):
        raise UsageError("--p and --q go together")
    if args.p is not None:
        ctx.lp_pair = (args.p, args.q)
    report = build_report(names, ctx, timings=not args.no_timings)
    if inputs:
        report["inputs"] = inputs
    _emit(report, args.json)
    return EXIT_OK if report["overall"] else EXIT_FAIL


def cmd_det(args):
    inputs = {}
    f = _matrix(args.matrix, inputs)
    n = f.shape[0]
    delta = fk_det(f)
    oracle = abs(np.linalg.det(f)) ** (1.0 / n)
    _emit({"inputs": inputs, "n": n, "delta": delta,
           "residuals": {"oracle": abs(delta - oracle) / max(delta, oracle, 1e-300)}}, args.json)
    return EXIT_OK


def cmd_factor(args):
    inputs = {}
    b = _matrix(args.matrix, inputs)
    alg = _algebra(args, b.shape[0], inputs)
    a = factor_in_A(b, alg)
    # the other route, for a cross check
    a2 = factor_via_weighted_projection(np.linalg.inv(b), alg)
    if alg.kind != "block_upper":
        a2 = a
    _emit({"inputs": inputs, "algebra": alg.descriptor(),
           "method": "block_cholesky" if alg.kind == "block_upper" else "weighted_projection",
           "a": a,
           "residuals": {"roundtrip": fro(adj(a) @ a - b) / fro(b),
                         "membership": alg.membership_residual(a),
                         "cross_method": fro(a - a2) / max(fro(a), 1e-300)}}, args.json)
    return EXIT_OK


def cmd_innerouter(args):
    inputs = {}
    f = _matrix(args.matrix, inputs)
    alg = _algebra(args, f.shape[0], inputs)
    n = alg.n
    pair = inner_outer(f, alg)
    other = inner_outer_via_projection(f, alg)
    u, h = pair.inner_u, pair.outer_h
    _, cert = solve_in_A(h, np.eye(n, dtype=np.complex128), alg)
    _emit({"inputs": inputs, "algebra": alg.descriptor(), "u": u, "h": h,
           "delta_f": fk_det(f), "delta_h": fk_det(h), "delta_phi_h": fk_det(alg.expectation(h)),
           "residuals": {"reconstruction": fro(u @ h - f) / fro(f),
                         "unitarity": fro(adj(u) @ u - np.eye(n)),
                         "membership": alg.membership_residual(h),
                         "outer_certificate": cert,
                         "route_agreement": max(fro(other.outer_h - h) / fro(h),
                                                fro(other.inner_u - u))}}, args.json)
    return EXIT_OK


def cmd_outer(args):
    inputs = {}
    h = _matrix(args.matrix, inputs)
    alg = _algebra(args, h.shape[0], inputs)
    ok, diag = is_outer(h, alg)
    _emit({"inputs": inputs, "algebra": alg.descriptor(), "outer": ok, "diagnostics": diag},
          args.json)
    return EXIT_OK


def cmd_szego(args):
    inputs = {}
    h = _matrix(args.matrix, inputs, "h")
    alg = _algebra(args, h.shape[0], inputs)
    opts = SzegoOptions(restarts=args.restarts, max_iters=args.max_iters, seed=args.seed)
    if args.q is not None:
        out = szego_lp_general(h, args.p, args.q, alg, opts)
        problem = "lp_general"
    elif args.p == 2.0:
        out = szego_l2(h, alg, opts)
        problem = "l2"
    else:
        out = szego_l1p(h, args.p, alg, opts)
        problem = "lp"
    delta = fk_det(h)
    payload = {"inputs": inputs, "algebra": alg.descriptor(), "problem": problem,
               "p": args.p, "q": args.q, "value": out.value, "delta": delta,
               "converged": out.converged, "iterations": out.iterations,
               "restarts": out.restarts_used, "restart_values": out.restart_values,
               "argmin_a": out.argmin_a, "argmin_d": out.argmin_d,
               "residuals": {"value_vs_delta": abs(out.value - delta) / max(1.0, delta),
                             "grad_norm": out.grad_norm}}
    if out.mirror_value is not None:
        payload["mirror_value"] = out.mirror_value
    _emit(payload, args.json)
    return EXIT_OK


def cmd_beurling(args):
    inputs = {}
    K, inputs["subspace"] = load_subspace(args.subspace)
    alg = _algebra(args, K.n, inputs)
    dec = beurling_extract(K, alg)
    K1, K2 = type_split(K, alg)
    _emit({"inputs": inputs, "algebra": alg.descriptor(), "dim_K": K.dim,
           "dim_wandering": wandering(K, alg).dim, "dim_type1": K1.dim, "dim_type2": K2.dim,
           "isometries": dec.isometries, "residuals": dec.residuals}, args.json)
    return EXIT_OK


def cmd_riesz(args):
    inputs = {}
    x = _matrix(args.matrix, inputs)
    alg = _algebra(args, x.shape[0], inputs)
    pair = riesz_factor(x, args.p, args.q, args.r, alg, eps=args.eps)
    target = x + (args.eps or 0.0) * np.eye(alg.n)
    xn = lp_norm(target, args.r)
    _emit({"inputs": inputs, "algebra": alg.descriptor(), "p": args.p, "q": args.q, "r": args.r,
           "eps": args.eps, "y": pair.y, "z": pair.z,
           "norms": {"x_r": xn, "y_p": lp_norm(pair.y, args.p), "z_q": lp_norm(pair.z, args.q)},
           "residuals": {"reconstruction": fro(pair.y @ pair.z - target) / fro(target),
                         "membership": max(alg.membership_residual(pair.y),
                                           alg.membership_residual(pair.z))}}, args.json)
    return EXIT_OK


def cmd_experiment(args):
    ctx = Context(seed=args.seed, n=args.n, partition=args.partition, trials=args.trials)
    if args.algebra:
        ctx.algebra, _ = load_algebra(args.algebra)
    report = build_report([args.name], ctx, timings=not args.no_timings)
    _emit(report, args.json)
    return EXIT_OK if report["overall"] else EXIT_FAIL


COMMANDS = {
    "verify": cmd_verify,
    "det": cmd_det,
    "factor": cmd_factor,
    "innerouter": cmd_innerouter,
    "outer": cmd_outer,
    "szego": cmd_szego,
    "beurling": cmd_beurling,
    "riesz": cmd_riesz,
    "experiment": cmd_experiment,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InputFormatError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PreconditionError as exc:
        name = type(exc).__name__
        print(f"{name}: {exc}", file=sys.stderr)
        print(json.dumps({"error": name, "message": str(exc)}))
        return EXIT_PRECONDITION
    except DimensionError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
