"""Command-line front end.

Every subcommand writes one table, as CSV (default) or JSON.  CSV files start
with a ``# memwalk:<table> v1`` comment line, use ``,`` separators and print
reals with 17 significant digits so they round-trip exactly.

Exit codes: 0 success, 1 numerical non-convergence, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys

from .kernels import KernelSpecError, parse_kernel_spec
from .quadrature import QuadratureError
from .sampler import RngStream, sample_memory_set
from .shape import asphericity_estimate, ellipse
from .simulate import default_threads, simulate_aligned, simulate_tensors
from .theory import ConvergenceError, a2_limit, closed_form_a2

log = logging.getLogger("memwalk")

SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


# -- output -----------------------------------------------------------------

def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_table(name, columns, rows, out="-", fmt="csv"):
    """Write ``rows`` (sequences aligned with ``columns``) to ``out`` (``-`` for stdout)."""
    stream = sys.stdout if out in (None, "-") else open(out, "w", newline="")
    try:
        if fmt == "json":
            doc = {
                "schema": f"memwalk:{name}",
                "version": SCHEMA_VERSION,
                "columns": list(columns),
                "rows": [{c: _jsonable(v) for c, v in zip(columns, row)} for row in rows],
            }
            json.dump(doc, stream, indent=1)
            stream.write("\n")
        else:
            stream.write(f"# memwalk:{name} v{SCHEMA_VERSION}\n")
            writer = csv.writer(stream, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
    finally:
        if stream is not sys.stdout:
            stream.close()


# -- argument helpers -------------------------------------------------------

def _kernel(spec):
    try:
        return parse_kernel_spec(spec)
    except KernelSpecError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (value > 0.0) or math.isinf(value):
        raise argparse.ArgumentTypeError(f"must be positive and finite: {text!r}")
    return value


def _rel_tol(text):
    value = _positive_float(text)
    if value > 1e-3:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1e-3]: {text!r}")
    return value


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1: {text!r}")
    return value


def _seed(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _float_list(text):
    items = [s for s in text.split(",") if s.strip()]
    if not items:
        raise argparse.ArgumentTypeError("empty list")
    try:
        return [float(s) for s in items]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _add_output(p):
    p.add_argument("--out", default="-", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _add_mc(p, c_required=True):
    if c_required:
        p.add_argument("--c", type=_positive_float, required=True, help="memory rate (expected memory count)")
    p.add_argument("--replicas", type=_positive_int, required=True)
    p.add_argument("--seed", type=_seed, default=0, help="master seed (unsigned 64-bit)")
    p.add_argument("--threads", type=_positive_int, default=None, help="worker processes (default: all cores)")


# -- subcommands ------------------------------------------------------------

def run_theory(args):
    res = a2_limit(args.kernel, rel_tol=args.rel_tol, method=args.method)
    exact = closed_form_a2(args.kernel)
    cols = ["kernel", "a2", "closed_form", "alpha_limit", "beta_limit", "tau_used", "rel_change_last_doubling"]
    row = [args.kernel.spec(), res.a2, exact, res.alpha_limit, res.beta_limit, res.tau_used, res.rel_change_last_doubling]
    write_table("theory", cols, [row], args.out, args.format)
    return 0


def run_estimate(args):
    batch = simulate_tensors(args.kernel, args.c, args.replicas, args.seed, args.threads)
    est = asphericity_estimate(batch, jackknife=args.jackknife)
    cols = ["kernel", "c", "replicas", "seed", "a2_hat", "stderr", "mean_num", "mean_den", "truncated_replicas"]
    row = [args.kernel.spec(), args.c, est.replicas, args.seed, est.a2_hat, est.stderr,
           est.mean_num, est.mean_den, int(batch.truncated.sum())]
    write_table("estimate", cols, [row], args.out, args.format)
    if args.tensors:
        rows = [[i, float(a), float(b), float(c), int(n)]
                for i, (a, b, c, n) in enumerate(zip(batch.t11, batch.t12, batch.t22, batch.n))]
        write_table("tensors", ["replica", "t11", "t12", "t22", "n"], rows, args.tensors, args.format)
    return 0


_SWEEP_PARAM = {"uniform": "r", "exponential": "lambda", "stretched": "a", "lomax": "a"}


def run_sweep(args):
    param = _SWEEP_PARAM[args.family]
    extra = f",{args.extra}" if args.extra else ""
    rows = []
    for value in args.grid:
        try:
            k = parse_kernel_spec(f"{args.family}:{param}={value!r}{extra}")
        except KernelSpecError as exc:
            raise UsageError(str(exc)) from exc
        theory = a2_limit(k, rel_tol=args.rel_tol).a2
        if args.theory_only:
            rows.append([value, theory, None, None])
            continue
        est = asphericity_estimate(simulate_tensors(k, args.c, args.replicas, args.seed, args.threads))
        rows.append([value, theory, est.a2_hat, est.stderr])
    write_table("sweep", [param, "a2_theory", "a2_hat", "stderr"], rows, args.out, args.format)
    return 0


def run_convergence(args):
    if len(args.cs) < 2:
        raise UsageError("--cs needs at least two values")
    if any(not (c > 0.0) or math.isinf(c) for c in args.cs):
        raise UsageError("--cs values must be positive and finite")
    theory = a2_limit(args.kernel, rel_tol=args.rel_tol).a2
    rows = []
    for c in args.cs:
        est = asphericity_estimate(simulate_tensors(args.kernel, c, args.replicas, args.seed, args.threads))
        rows.append([c, est.a2_hat, est.stderr, theory])
    write_table("convergence", ["c", "a2_hat", "stderr", "a2_theory"], rows, args.out, args.format)
    return 0


def run_density(args):
    rows = []
    for i, pts in simulate_aligned(args.kernel, args.c, args.replicas, args.seed, args.threads):
        if pts is None:
            log.warning("replica %d has fewer than 2 memorised points; skipped", i)
            continue
        rows.extend([i, float(x), float(y)] for x, y in pts)
    write_table("density", ["replica", "x", "y"], rows, args.out, args.format)
    return 0


def run_ellipse(args):
    batch = simulate_tensors(args.kernel, args.c, args.replicas, args.seed, args.threads)
    rows = []
    for i, g in enumerate(batch):
        e = ellipse(g, args.kappa)
        rows.append([i, e.semi_major, e.semi_minor, e.angle_theta, g.n_points])
    write_table("ellipse", ["replica", "semi_major", "semi_minor", "angle_theta", "n"], rows, args.out, args.format)
    return 0


def run_sample(args):
    mem = sample_memory_set(args.kernel, args.c, RngStream(args.seed, args.index))
    rows = [[0.0, 0.0, 0.0]] + [[float(t), float(x), float(y)] for t, (x, y) in zip(mem.times, mem.locations)]
    write_table("memoryset", ["t", "x", "y"], rows, args.out, args.format)
    if mem.truncated:
        log.warning("arrival times were capped deep in the kernel tail")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="memwalk", description="Shape of memorised Brownian walks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theory", help="exact dense-memory asphericity by quadrature")
    p.add_argument("--kernel", type=_kernel, required=True)
    p.add_argument("--rel-tol", type=_rel_tol, default=1e-8)
    p.add_argument("--method", choices=("tail", "truncated"), default="tail")
    _add_output(p)
    p.set_defaults(func=run_theory)

    p = sub.add_parser("estimate", help="Monte Carlo asphericity")
    p.add_argument("--kernel", type=_kernel, required=True)
    _add_mc(p)
    p.add_argument("--tensors", default=None, help="also write per-replica tensors here")
    p.add_argument("--jackknife", action="store_true", help="jackknife standard error")
    _add_output(p)
    p.set_defaults(func=run_estimate)

    p = sub.add_parser("sweep", help="theory and Monte Carlo over a kernel-parameter grid")
    p.add_argument("--family", choices=sorted(_SWEEP_PARAM), required=True)
    p.add_argument("--grid", type=_float_list, required=True, help="comma-separated parameter values")
    p.add_argument("--extra", default="", help="fixed extra kernel parameters, e.g. scale=2")
    _add_mc(p)
    p.add_argument("--theory-only", action="store_true")
    p.add_argument("--rel-tol", type=_rel_tol, default=1e-8)
    _add_output(p)
    p.set_defaults(func=run_sweep)

    p = sub.add_parser("convergence", help="Monte Carlo asphericity across memory rates")
    p.add_argument("--kernel", type=_kernel, required=True)
    p.add_argument("--cs", type=_float_list, required=True, help="comma-separated memory rates")
    _add_mc(p, c_required=False)
    p.add_argument("--rel-tol", type=_rel_tol, default=1e-8)
    _add_output(p)
    p.set_defaults(func=run_convergence)

    p = sub.add_parser("density", help="aligned point clouds for density plots")
    p.add_argument("--kernel", type=_kernel, required=True)
    _add_mc(p)
    _add_output(p)
    p.set_defaults(func=run_density)

    p = sub.add_parser("ellipse", help="per-replica ellipse parameters")
    p.add_argument("--kernel", type=_kernel, required=True)
    _add_mc(p)
    p.add_argument("--kappa", type=_positive_float, default=2.0)
    _add_output(p)
    p.set_defaults(func=run_ellipse)

    p = sub.add_parser("sample", help="one memory set as t,x,y rows")
    p.add_argument("--kernel", type=_kernel, required=True)
    p.add_argument("--c", type=_positive_float, required=True)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--index", type=int, default=0, help="replica (stream) index")
    _add_output(p)
    p.set_defaults(func=run_sample)
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="memwalk: %(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", None) is None and hasattr(args, "threads"):
        args.threads = default_threads()
    if getattr(args, "index", 0) < 0:
        parser.error("--index must be non-negative")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (ConvergenceError, QuadratureError) as exc:
        print(f"memwalk: numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
