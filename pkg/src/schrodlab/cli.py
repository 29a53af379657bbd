"""Command line entry point `lab`."""

from __future__ import annotations

import argparse
import csv
import os
from pathlib import Path
import sys
import tempfile

import numpy as np

from . import config as config_mod
from . import diophantine as dio
from . import suites
from .errors import LabError
from .harness import divergence_sweep, load_or_build, report_emit
from .lattice import build_params

MEASURE_COLUMNS = ("estimate", "half_width", "samples", "method")


def _write_csv(header, rows, out):
    if out:
        fh = open(out, "w", newline="")
    else:
        fh = sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    finally:
        if out:
            fh.close()


def _measure_row(est):
    return (est.value, est.half_width, est.samples, est.method)


def _inputs(args, cfg=None):
    cfg = cfg or suites.headline_config()
    return load_or_build(cfg.n, cfg.resolved_r_min, cfg.validation_budget,
                         cache=args.profile_cache or cfg.profile_cache)


def cmd_run(args) -> int:
    cfg = config_mod.load(args.config)
    profile, constants = _inputs(args, cfg)
    rows, summary = divergence_sweep(cfg, profile, constants)
    out = Path(args.output or cfg.output)
    paths = report_emit(rows, summary, cfg, profile, constants, out)
    for p in paths:
        print(p)
    for r in rows:
        if r.error:
            print(f"row m={r.m}: {r.error}", file=sys.stderr)
    ok = summary["failed_rows"] == 0
    if "slope" in summary:
        lo, hi = 0.5 * summary["predicted_slope"], 1.5 * summary["predicted_slope"]
        print(f"slope {summary['slope']:.4f} (band [{lo:.4f}, {hi:.4f}]), monotone {summary['monotone']}")
        if len(rows) >= 3:
            ok = ok and summary["monotone"] and lo <= summary["slope"] <= hi
    return 0 if ok else 1


def cmd_verify_all(args) -> int:
    if args.config:
        config_mod.load(args.config)  # validate it even though the checks fix their own parameters
    only = {int(c) for c in args.only.split(",")} if args.only else None
    if args.outdir:
        results = suites.run_all(args.outdir, cache=args.profile_cache, only=only)
    else:
        with tempfile.TemporaryDirectory() as tmp:
            results = suites.run_all(tmp, cache=args.profile_cache, only=only)
    failed = [r.criterion for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


def cmd_dirichlet(args) -> int:
    rng = np.random.default_rng(args.seed)
    ys = rng.uniform(0.0, 1.0, size=(args.samples, args.n))
    p = dio.first_witness(ys, args.N)
    est = dio.MeasureEstimate.from_counts(int(np.count_nonzero(p)), args.samples)
    _write_csv(MEASURE_COLUMNS, [_measure_row(est)], args.out)
    return 0 if est.value == 1.0 else 1


def cmd_measure_s(args) -> int:
    est = dio.measure_S(args.N, args.n, args.samples, np.random.default_rng(args.seed))
    _write_csv(MEASURE_COLUMNS, [_measure_row(est)], args.out)
    return 0 if est.value >= 0.75 - 3 * est.half_width else 1


def cmd_quotient_measure(args) -> int:
    cfg = config_mod.RunConfig(n=args.n, sigma=args.sigma, s=args.sigma * args.n / 2 - 0.05, sweep=(args.m,))
    cfg = config_mod.validate(cfg)
    _, constants = _inputs(args, cfg if args.n != 2 else None)
    params = build_params(args.n, args.sigma, args.m, cfg.s, constants)
    rep = dio.quotient_report(params, args.samples, np.random.default_rng(args.seed))
    _write_csv(("set",) + MEASURE_COLUMNS, [(k,) + _measure_row(v) for k, v in rep.items()], args.out)
    q = rep["quotient"]
    return 0 if q.value >= 0.5 - 3 * q.half_width else 1


def _suite_cmd(make):
    def run(args) -> int:
        res = make(args)
        if "_rows" in res.metrics:
            _write_csv(suites.INSTANCE_COLUMNS, suites.instance_csv_rows(res), args.out)
            print(res.line(), file=sys.stderr)
        else:
            print(res.line())
        return 0 if res.passed else 1
    return run


def _with_inputs(fn):
    def make(args):
        profile, constants = _inputs(args)
        return fn(profile, constants)
    return make


cmd_verify_lemma4 = _suite_cmd(_with_inputs(lambda p, c: suites.lemma4_suite(p)))
cmd_verify_lemma5 = _suite_cmd(lambda args: suites.lemma5_suite())
cmd_verify_lower_bound = _suite_cmd(_with_inputs(suites.lower_bound_suite))
cmd_verify_pseudoconformal = _suite_cmd(_with_inputs(suites.pseudoconformal_suite))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lab", description="Divergence experiments for the Schrodinger maximal function.")
    ap.add_argument("--profile-cache", help="JSON file caching the bump profile and derived constants")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the divergence sweep of a config and write the report")
    p.add_argument("config")
    p.add_argument("--output", help="report directory (defaults to the config's output)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify-all", help="run every acceptance check")
    p.add_argument("config", nargs="?")
    p.add_argument("--outdir", help="where the determinism check writes its two reports")
    p.add_argument("--only", help="comma-separated criterion numbers")
    p.set_defaults(func=cmd_verify_all)

    for name, func, default_n in (("dirichlet", cmd_dirichlet, 50.0), ("measure-s", cmd_measure_s, 1e4)):
        p = sub.add_parser(name)
        p.add_argument("--n", type=int, default=2)
        p.add_argument("--N", type=float, default=default_n)
        p.add_argument("--samples", type=int, default=10_000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out")
        p.set_defaults(func=func)

    p = sub.add_parser("quotient-measure")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--m", type=int, default=20)
    p.add_argument("--sigma", type=float, default=0.2)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_quotient_measure)

    for name, func in (("verify-lemma4", cmd_verify_lemma4), ("verify-lemma5", cmd_verify_lemma5),
                       ("verify-lower-bound", cmd_verify_lower_bound),
                       ("verify-pseudoconformal", cmd_verify_pseudoconformal)):
        p = sub.add_parser(name)
        p.add_argument("--out", help="write the per-instance CSV here instead of stdout")
        p.set_defaults(func=func)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LabError as exc:
        print(f"lab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"lab: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
