"""Command-line interface.

Every subcommand writes CSV or JSON to stdout or ``--output``.  CSV files
start with a ``#`` line recording the full configuration, then a header
row; floats use 17 significant digits.  JSON keys are sorted.  Outputs
carry no timestamps, so identical invocations give identical bytes.

Exit codes: 0 success, 1 numerical failure, 2 inconclusive validation,
64 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
import time

import numpy as np

from . import __version__
from .ode import DomainError, NumericalError, check_dimension

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 64

METHODS = ("series", "shooting", "regularized", "one_over_k", "picard")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


# ---------------------------------------------------------------------------
# argument types

def int_range(text):
    """Parse ``"a..b"`` (inclusive) or a single integer into a list."""
    m = re.fullmatch(r"\s*(-?\d+)\s*(?:\.\.\s*(-?\d+)\s*)?", text)
    if not m:
        raise argparse.ArgumentTypeError(f"expected N or A..B, got {text!r}")
    lo = int(m.group(1))
    hi = int(m.group(2)) if m.group(2) is not None else lo
    if hi < lo:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return list(range(lo, hi + 1))


def _positive(kind):
    def conv(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}")
        if not (v > 0 and math.isfinite(v)):
            raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
        return v
    return conv


pos_float = _positive(float)
pos_int = _positive(int)


def dimension(text):
    try:
        return check_dimension(int(text))
    except (ValueError, DomainError) as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _float_list(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad float list {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


# ---------------------------------------------------------------------------
# output helpers

def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _config_line(args):
    skip = {"func", "output"}
    items = sorted((k, v) for k, v in vars(args).items() if k not in skip)
    return "soliton " + " ".join(f"{k}={v}" for k, v in items)


class Output:
    """Collects the command's text and writes it once at the end."""

    def __init__(self, args):
        self.args = args
        self.buf = io.StringIO()

    def csv(self, header, rows):
        self.buf.write(f"# {_config_line(self.args)}\n")
        w = csv.writer(self.buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])

    def json(self, obj):
        self.buf.write(json.dumps(_jsonable(obj), sort_keys=True, indent=2))
        self.buf.write("\n")

    def text(self, s):
        self.buf.write(s)

    def flush(self):
        data = self.buf.getvalue()
        if self.args.output in (None, "-"):
            try:
                sys.stdout.write(data)
                sys.stdout.flush()
            except BrokenPipeError:
                # reader closed early (e.g. piped into head)
                sys.stdout = None
        else:
            with open(self.args.output, "w", newline="") as fh:
                fh.write(data)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, np.integer):
        return int(obj)
    if hasattr(obj, "value") and not isinstance(obj, (int, str)):
        return obj.value
    return obj


def _grid(args, lo=0.0):
    return np.linspace(lo, args.r_max, args.points)


# ---------------------------------------------------------------------------
# subcommands

def cmd_coeffs(args, out):
    from .series import (check_decay_bound, check_decay_rate, coefficients,
                         estimate_radius, write_coefficients_csv)

    table = coefficients(args.n, args.max_l)
    decay = check_decay_bound(table)
    if args.format == "json":
        rep = {"n": args.n, "max_l": args.max_l,
               "decay_bound_violations": decay.violations,
               "coefficients": [[a.numerator, a.denominator]
                                for a in table.coeffs]}
        if args.max_l >= 100:
            rep["decay_rate"] = check_decay_rate(table)
            rep["radius_estimate"] = estimate_radius(table)
        out.json(rep)
    else:
        out.text("# bound |a_l| <= 1/(4l): "
                 + ("holds" if decay.passed else
                    f"violated at l={decay.violations}") + "\n")
        write_coefficients_csv(table, out.buf, _config_line(args))
    return EXIT_OK if decay.passed else EXIT_NUMERICAL


def cmd_sums(args, out):
    from .series import sigma2, sigma3, verification_lines

    t0 = time.perf_counter()
    lines = verification_lines(args.max_l)
    ok2 = all(sigma2(l) <= 1 for l in range(args.max_l + 1))
    ok3 = all(sigma3(l) <= 2 for l in range(3, args.max_l + 1))
    eq = [l for l in range(args.max_l + 1) if sigma2(l) == 1]
    for line in lines:
        out.text(line + "\n")
    sys.stderr.write(
        f"sigma2 <= 1 for l <= {args.max_l}: {'yes' if ok2 else 'NO'} "
        f"(equality at {eq}); sigma3 <= 2 for 3 <= l <= {args.max_l}: "
        f"{'yes' if ok3 else 'NO'}; {time.perf_counter() - t0:.2f} s\n")
    return EXIT_OK if ok2 and ok3 else EXIT_NUMERICAL


def _solve_profile(args):
    from .approx import solve_one_over_k, solve_regularized
    from .picard import PicardConfig, picard_solve
    from .series import series_profile
    from .shooting import bisect_initial, psi_to_phi

    n, m = args.n, args.method
    if m == "series":
        if args.r_max >= n:
            raise UsageError(f"series diverges beyond r={n}; use --r-max < n")
        return series_profile(n, _grid(args), args.truncation)
    if m == "shooting":
        res = bisect_initial(n, args.horizon, args.a_tol)
        lo = math.exp(-res.psi_profile.r_max)
        if args.r_max > 1:
            raise UsageError("shooting profiles cover radii up to 1")
        return psi_to_phi(res, grid=np.linspace(max(lo, args.r_max
                                                    / args.points),
                                                args.r_max, args.points))
    if m == "regularized":
        return solve_regularized(n, args.eps, args.r_max, grid=_grid(args))
    if m == "one_over_k":
        g = np.linspace(1.0 / args.k, args.r_max, args.points)
        return solve_one_over_k(n, args.k, args.r_max, grid=g,
                                initial_value=args.initial_value)
    cfg = PicardConfig.for_dimension(n, **({"p": args.p} if args.p else {}))
    prof, _ = picard_solve(n, args.truncation if args.truncation is not None
                           else 3, cfg)
    return prof


def _write_profile(out, prof):
    out.csv(["r", "phi", "dphi"], prof.rows())


def cmd_solve(args, out):
    prof = _solve_profile(args)
    if args.format == "json":
        out.json({"n": prof.n, "method": prof.method.value,
                  "params": prof.params, "r": prof.grid, "phi": prof.values,
                  "dphi": prof.derivs})
    else:
        _write_profile(out, prof)
    return EXIT_OK


def cmd_shoot(args, out):
    from .shooting import bisect_initial, write_trajectory_csv

    res = bisect_initial(args.n, args.horizon, args.a_tol, step=args.step,
                         margin=args.margin)
    sol = res.psi_profile
    if args.format == "csv":
        write_trajectory_csv(args.n, sol.grid, sol.values, out.buf,
                             _config_line(args))
    else:
        out.json({"n": res.n, "a_star": res.a_star,
                  "bracket": list(res.bracket),
                  "bracket_history": [list(b) for b in res.bracket_history],
                  "final_horizon": res.final_horizon,
                  "floor_reached": res.floor_reached,
                  "survival_interval": res.survival_interval,
                  "shots": [list(s) for s in res.shots],
                  "accepted_gap_max": float(np.max(np.abs(sol.gap(sol.grid))))})
    return EXIT_OK


def cmd_radius(args, out):
    from .series import check_decay_rate, coefficients, estimate_radius

    rows = []
    for n in args.n:
        check_dimension(n)
        t = coefficients(n, args.max_l)
        rows.append((n, estimate_radius(t), check_decay_rate(t)))
    if args.format == "json":
        out.json([{"n": n, "radius": r, "decay_rate": lam}
                  for n, r, lam in rows])
    else:
        out.csv(["n", "radius", "decay_rate"], rows)
    return EXIT_OK


def cmd_compare(args, out):
    from .approx import sweep_one_over_k, sweep_regularized
    from .series import series_profile
    from .shooting import bisect_initial, psi_to_phi
    from .validation import compare_methods

    n = args.n
    x = np.linspace(args.r_lo, args.r_hi, args.points)
    profs = [series_profile(n, x),
             psi_to_phi(bisect_initial(n, args.horizon), grid=x),
             sweep_regularized(n, r_grid=x).limit,
             sweep_one_over_k(n, r_grid=x).limit]
    cmp = compare_methods(profs, x)
    if args.format == "csv":
        out.csv(["r"] + cmp.labels, zip(x, *(p.values for p in profs)))
    else:
        out.json({"n": n, "labels": cmp.labels, "matrix": cmp.matrix,
                  "pairs": cmp.pairs(), "max": cmp.max_pair()})
    return EXIT_OK


def cmd_figure(args, out):
    from .shooting import (backward_family, bisect_initial, forward_family,
                           upper_barrier)

    n = args.n
    rows = []
    if args.id == 1:
        a_values = args.a if args.a else list(np.linspace(0.0, 1.0 / (n - 1),
                                                          11))
        for c in forward_family(n, a_values, horizon=args.horizon):
            rows += [("shot", c["a"], c["classification"], x, y)
                     for x, y in zip(c["x"], c["phi"])]
        res = bisect_initial(n, args.horizon)
        t = np.linspace(0, args.horizon, 300)
        y = res.psi_profile.sample(t)[0]
        rows += [("solution", res.a_star, "trapped", x, v)
                 for x, v in zip(np.exp(-t)[::-1], y[::-1])]
        header = ["curve", "a", "classification", "r", "phi"]
    else:
        curves = backward_family(n, args.eps_step, args.k0, r_end=1.0)
        r_hi = max(c["r0"] for c in curves)
        t = np.linspace(1.0, r_hi, 300)
        res = bisect_initial(n, r_hi)
        ref = [("barrier", "", "", t, upper_barrier(n, t)),
               ("solution", "", res.a_star, t,
                res.psi_profile.sample(t)[0])]
        fam = [(f"psi_{c['start']}", c["k0"], c["r0"], c["r"], c["psi"])
               for c in curves]
        for name, k0, r0, r, y in fam + ref:
            for ri, yi in zip(r, y):
                row = [name, k0, r0, ri, yi]
                if args.id == 3:
                    row.append(math.log10(yi) if yi > 0 else float("nan"))
                rows.append(row)
        header = ["curve", "k0", "r0", "r", "psi"]
        if args.id == 3:
            header.append("log10_psi")
    out.csv(header, rows)
    return EXIT_OK


def cmd_validate(args, out):
    from .validation import Verdict, validate

    rep = validate(args.n)
    out.json(rep.to_dict())
    return {Verdict.PASS: EXIT_OK, Verdict.FAIL: EXIT_NUMERICAL,
            Verdict.INCONCLUSIVE: EXIT_INCONCLUSIVE}[rep.verdict]


# ---------------------------------------------------------------------------
# parser

def build_parser():
    p = _Parser(prog="soliton",
                description="Radial translating solitons: series, shooting, "
                            "regularization and fixed-point solvers.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_, fmt="csv"):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--output", "-o", help="write here instead of stdout")
        sp.add_argument("--format", choices=("csv", "json"), default=fmt)
        sp.set_defaults(func=func)
        return sp

    sp = add("coeffs", cmd_coeffs, "exact series coefficients and bounds")
    sp.add_argument("--n", type=dimension, default=2)
    sp.add_argument("--max-l", type=pos_int, default=500)

    sp = add("sums", cmd_sums, "exact convolution-sum verification")
    sp.add_argument("--max-l", type=pos_int, default=500)

    sp = add("solve", cmd_solve, "radial profile by one method")
    sp.add_argument("--n", type=dimension, default=2)
    sp.add_argument("--method", choices=METHODS, default="series")
    sp.add_argument("--r-max", type=pos_float, default=1.0)
    sp.add_argument("--points", type=pos_int, default=101)
    sp.add_argument("--eps", type=pos_float, default=2.0 ** -10)
    sp.add_argument("--k", type=pos_int, default=256)
    sp.add_argument("--initial-value", type=float, default=None,
                    help="override phi(1/k) for the 1/k method")
    sp.add_argument("--truncation", type=int, default=None,
                    help="series order (series, picard)")
    sp.add_argument("--p", type=pos_float, default=None,
                    help="weight exponent (picard)")
    sp.add_argument("--horizon", type=pos_float, default=20.0)
    sp.add_argument("--a-tol", type=pos_float, default=1e-12)

    sp = add("shoot", cmd_shoot, "bisect the initial value in psi", "json")
    sp.add_argument("--n", type=dimension, default=2)
    sp.add_argument("--horizon", type=pos_float, default=20.0)
    sp.add_argument("--a-tol", type=pos_float, default=1e-12)
    sp.add_argument("--step", type=pos_float, default=0.5)
    sp.add_argument("--margin", type=pos_float, default=20.0)

    sp = add("radius", cmd_radius, "radius of convergence estimates")
    sp.add_argument("--n", type=int_range, default=int_range("2..10"))
    sp.add_argument("--max-l", type=pos_int, default=500)

    sp = add("compare", cmd_compare, "cross-method comparison", "json")
    sp.add_argument("--n", type=dimension, default=2)
    sp.add_argument("--r-lo", type=pos_float, default=0.1)
    sp.add_argument("--r-hi", type=pos_float, default=1.0)
    sp.add_argument("--points", type=pos_int, default=91)
    sp.add_argument("--horizon", type=pos_float, default=20.0)

    sp = add("figure", cmd_figure, "figure data series")
    sp.add_argument("--id", type=int, choices=(1, 2, 3), required=True,
                    help="1 forward shots, 2 backward families, 3 same in log")
    sp.add_argument("--n", type=dimension, default=2)
    sp.add_argument("--eps-step", type=pos_float, default=0.5)
    sp.add_argument("--k0", type=int_range, default=int_range("3..12"))
    sp.add_argument("--a", type=_float_list, default=None,
                    help="comma-separated initial values (figure 1)")
    sp.add_argument("--horizon", type=pos_float, default=6.0)

    sp = add("validate", cmd_validate, "full cross-check report", "json")
    sp.add_argument("--n", type=dimension, default=2)
    return p


def _check_args(args):
    if args.command == "solve":
        if args.points < 2:
            raise UsageError("--points must be at least 2")
        if args.method == "one_over_k" and args.r_max <= 1.0 / args.k:
            raise UsageError("--r-max must exceed 1/k")
    if args.command == "compare" and not args.r_lo < args.r_hi <= 1:
        raise UsageError("need r-lo < r-hi <= 1")
    if args.command == "radius" and min(args.n) < 2:
        raise UsageError("dimensions must be at least 2")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Output(args)
    try:
        _check_args(args)
        code = args.func(args, out)
    except (UsageError, DomainError) as exc:
        sys.stderr.write(f"soliton {args.command}: usage error: {exc}\n")
        return EXIT_USAGE
    except NumericalError as exc:
        sys.stderr.write(f"soliton {args.command}: numerical failure: "
                         f"{exc}\n")
        return EXIT_NUMERICAL
    out.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
