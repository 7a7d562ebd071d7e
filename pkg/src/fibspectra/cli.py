"""Command-line entry point.

Every command prints (or writes to ``--out``) one JSON document

    {"command": ..., "config": {...}, "result": ...}

whose ``config`` block holds every parameter that shapes the result.  The
thread count only changes how work is scheduled, never the bytes of the
output, so it is left out of ``config``.

Exit codes: 0 success or valid certificate, 1 usage error, 2 numerical
failure, 3 certificate invalid.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys

import numpy as np

from .bethe_sommerfeld import DEFAULT_TRIM, CertificateError, NoTailError, certify, direct_sum_tail
from .cantor import box_dimension, thickness
from .intervals import EmptySetError, Interval, IntervalSet, covers_interval, minkowski_sum
from .lowenergy import LowEnergyError, lambda_sweep
from .spectrum import (
    DEFAULT_TOL_E, DEFAULT_TOL_T, ENERGY, T_PARAM, SamplingError, approximant, spectrum_in_t,
)
from .trace import fricke_vogt
from .transfer import Model, initial_traces, invariant_closed_form

log = logging.getLogger("fibspectra")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_INVALID = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- helpers ------------------------------------------------------------------

def _model(args) -> Model:
    if args.model:
        with open(args.model) as fh:
            return Model.from_json(json.load(fh))
    if args.lam is None:
        raise UsageError("give --lambda or --model")
    return Model.canonical(args.lam)


def _load_set(path: str) -> IntervalSet:
    """IntervalSet from a bare set, an approximant, or a wrapped CLI output."""
    with open(path) as fh:
        obj = json.load(fh)
    if "result" in obj:
        obj = obj["result"]
    if "intervals" not in obj:
        raise UsageError(f"{path}: no 'intervals' field")
    return IntervalSet(obj["intervals"])


def _positive(name: str, x: float) -> None:
    if not (x > 0 and math.isfinite(x)):
        raise UsageError(f"{name} must be a positive finite number")


def _dump(doc) -> str:
    return json.dumps(doc, allow_nan=False) + "\n"


def _csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def _interval_rows(s: IntervalSet):
    return [("lo", "hi")] + [(float(lo), float(hi)) for lo, hi in s.array]


# -- commands ------------------------------------------------------------------
# each returns (config, result, csv_rows, exit_code)

def cmd_spectrum(args):
    m = _model(args)
    if args.level < 1:
        raise UsageError("level must be >= 1")
    tol = args.tol
    if args.variable == T_PARAM:
        if not args.t_range:
            raise UsageError("--variable t needs --t-range")
        rng = Interval(*args.t_range)
        tol = DEFAULT_TOL_T if tol is None else tol
    else:
        if args.emax is None:
            raise UsageError("--variable E needs --emax")
        rng = Interval(args.emin, args.emax)
        tol = DEFAULT_TOL_E if tol is None else tol
    _positive("tol", tol)
    if not rng.hi > rng.lo:
        raise UsageError("range must be nonempty")
    if args.variable == T_PARAM:
        spec = spectrum_in_t(m, args.level, rng, tol, threads=args.threads)
    else:
        spec = approximant(m, args.level, rng, tol, ENERGY, threads=args.threads)
    cfg = {"model": m.to_json(), "level": args.level, "variable": args.variable,
           "range": rng.as_list(), "tol": tol}
    return cfg, spec.to_json(), _interval_rows(spec.set), EXIT_OK


def cmd_sum(args):
    sets = [_load_set(p) for p in args.inputs]
    out = sets[0]
    for s in sets[1:]:
        out = minkowski_sum(out, s)
    cfg = {"inputs": list(args.inputs)}
    return cfg, out.to_json(), _interval_rows(out), EXIT_OK


def cmd_thickness(args):
    rep = thickness(_load_set(args.input))
    rows = [("gap_lo", "gap_hi", "left_ratio", "right_ratio")]
    rows += [(g.lo, g.hi, l, r) for g, l, r in rep.per_gap_ratios]
    return {"input": args.input}, rep.to_json(), rows, EXIT_OK


def cmd_dim(args):
    lo, hi, n = args.scales
    n_int = int(n)
    if n_int != n:
        raise UsageError("number of scales must be an integer")
    s = _load_set(args.input)
    if args.clip:
        s = s.clip(*args.clip)
    est = box_dimension(s, lo, hi, n_int)
    rows = [("eps", "count")] + list(zip(est.scales, est.counts))
    cfg = {"input": args.input, "scales": [lo, hi, n_int], "clip": args.clip}
    return cfg, est.to_json(), rows, EXIT_OK


def cmd_invariant(args):
    if args.lam is None:
        raise UsageError("invariant needs --lambda")
    lo, hi, n = args.grid
    n_int = int(n)
    if n_int < 1 or n_int != n:
        raise UsageError("grid point count must be a positive integer")
    m = Model.canonical(args.lam)
    E = np.linspace(lo, hi, n_int)
    closed = np.asarray(invariant_closed_form(args.lam, E, limit=True), dtype=float)
    direct = np.asarray(fricke_vogt(initial_traces(m, E)), dtype=float)
    table = [[float(e), float(c), float(d)] for e, c, d in zip(E, closed, direct)]
    res = {"columns": ["E", "closed_form", "fricke_vogt"], "rows": table,
           "max_abs_difference": float(np.max(np.abs(closed - direct)))}
    cfg = {"lambda": args.lam, "grid": [lo, hi, n_int]}
    return cfg, res, [tuple(res["columns"])] + table, EXIT_OK


def cmd_bs_verify(args):
    m = _model(args)
    n_lo, n_hi = args.n
    tol = DEFAULT_TOL_T if args.tol is None else args.tol
    _positive("tol", tol)
    if n_hi <= n_lo:
        raise UsageError("need n_lo < n_hi")
    t_rng = Interval(n_lo * math.pi, (n_hi + 1) * math.pi)
    spec = spectrum_in_t(m, args.level, t_rng, tol, threads=args.threads)
    fam, cert = certify(spec, n_lo, n_hi, args.trim)
    res = {"certificate": cert.to_json(), "windows": fam.to_json()}
    if args.direct:
        e_max = ((n_hi + 2) * math.pi) ** 2
        spec_e = approximant(m, args.level, Interval(0.0, e_max), DEFAULT_TOL_E,
                             threads=args.threads)
        try:
            e1, cov = direct_sum_tail(spec_e, args.direct_tol)
            res["direct"] = {"e1": e1, "covered": cov.as_list(), "e_max": e_max}
        except NoTailError as exc:
            res["direct"] = {"error": str(exc), "e_max": e_max}
            cov = None
        if cert.valid:
            # the two routes must agree wherever both speak
            top = cert.e_max if cov is None else min(cert.e_max, cov.hi)
            s = minkowski_sum(spec_e.set, spec_e.set)
            res["direct"]["certified_range_covered"] = covers_interval(
                s, Interval(cert.e1, top), args.direct_tol)
    rows = [("n", "tau", "tau_squared")]
    sq = cert.squared_thickness_list or (None,) * len(cert.thickness_list)
    rows += [(n, t, s) for n, t, s in zip(cert.window_ns, cert.thickness_list, sq)]
    cfg = {"model": m.to_json(), "level": args.level, "n": [n_lo, n_hi], "trim": args.trim,
           "tol": tol, "direct": args.direct, "direct_tol": args.direct_tol}
    return cfg, res, rows, EXIT_OK if cert.valid else EXIT_INVALID


def cmd_low_energy(args):
    if args.level < 4:
        raise UsageError("low-energy needs level >= 4")
    tol = DEFAULT_TOL_E if args.tol is None else args.tol
    _positive("tol", tol)
    reports, thr = lambda_sweep(args.lams, args.level, tol, args.d, args.threads)
    res = {"reports": [r.to_json() for r in reports], "empirical_threshold": thr,
           "threshold_note": "smallest swept lambda from which every slope is below 1/d; empirical"}
    rows = [("lambda", "level", "sum_measure", "slope")]
    for r in reports:
        rows += [(r.lam, k, mm, r.dim_estimate.slope) for k, mm in r.sum_measure_by_level]
    cfg = {"lambdas": sorted(args.lams), "level": args.level, "d": args.d, "tol": tol}
    return cfg, res, rows, EXIT_OK


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--tol", type=float, default=None,
                        help="solver tolerance (default 1e-9 in E, 1e-10 in t)")
    common.add_argument("--threads", type=int, default=1, help="worker threads")
    common.add_argument("--out", help="output file (default stdout)")
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json", default="json")
    fmt.add_argument("--csv", dest="fmt", action="store_const", const="csv",
                     help="plot-ready CSV instead of JSON")
    common.add_argument("-v", "--verbose", action="store_true")

    model = _Parser(add_help=False)
    model.add_argument("--lambda", dest="lam", type=float, help="coupling of the canonical model")
    model.add_argument("--model", help="model JSON file")

    p = _Parser(prog="fibspectra", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("spectrum", parents=[common, model], help="finite-level approximant")
    s.add_argument("--level", type=int, required=True)
    s.add_argument("--variable", choices=[ENERGY, T_PARAM], default=ENERGY)
    s.add_argument("--emin", type=float, default=0.0)
    s.add_argument("--emax", type=float)
    s.add_argument("--t-range", type=float, nargs=2, metavar=("LO", "HI"))
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("sum", parents=[common], help="Minkowski sum of set files")
    s.add_argument("inputs", nargs="+")
    s.set_defaults(func=cmd_sum)

    s = sub.add_parser("thickness", parents=[common], help="thickness of a set file")
    s.add_argument("--input", required=True)
    s.set_defaults(func=cmd_thickness)

    s = sub.add_parser("dim", parents=[common], help="box-counting dimension")
    s.add_argument("--input", required=True)
    s.add_argument("--scales", type=float, nargs=3, metavar=("LO", "HI", "N"), required=True)
    s.add_argument("--clip", type=float, nargs=2, metavar=("LO", "HI"))
    s.set_defaults(func=cmd_dim)

    s = sub.add_parser("invariant", parents=[common, model],
                       help="closed-form invariant against the trace-map invariant")
    s.add_argument("--grid", type=float, nargs=3, metavar=("LO", "HI", "N"), required=True)
    s.set_defaults(func=cmd_invariant)

    s = sub.add_parser("bs-verify", parents=[common, model], help="half-line certificate")
    s.add_argument("--level", type=int, required=True)
    s.add_argument("--n", type=int, nargs=2, metavar=("LO", "HI"), required=True)
    s.add_argument("--trim", type=float, default=DEFAULT_TRIM)
    s.add_argument("--direct", action="store_true", help="also run the direct-sum check")
    s.add_argument("--direct-tol", type=float, default=1e-6)
    s.set_defaults(func=cmd_bs_verify)

    s = sub.add_parser("low-energy", parents=[common], help="low-energy report / lambda sweep")
    s.add_argument("--lambda", dest="lams", type=float, nargs="+", required=True)
    s.add_argument("--level", type=int, required=True)
    s.add_argument("--d", type=int, default=2)
    s.set_defaults(func=cmd_low_energy)
    return p


def main(argv=None) -> int:
    p = build_parser()
    args = p.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        p.error("--threads must be >= 1")
    try:
        cfg, res, rows, code = args.func(args)
    except (UsageError, CertificateError, EmptySetError, ValueError) as exc:
        print(f"fibspectra {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SamplingError, NoTailError, LowEnergyError, FloatingPointError) as exc:
        print(f"fibspectra {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    text = _csv(rows) if args.fmt == "csv" else _dump(
        {"command": args.command, "config": cfg, "result": res})
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
