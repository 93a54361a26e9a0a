"""Command-line front end: ``groupdyn {psi,ladder,simulate,fit,bands}``.

Exit codes: 0 success, 2 usage or input error, 3 computation infeasible.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import fitting, simulator
from .analytic import REFERENCE_BANDS, DomainError, GroupScalingParams, ladder, psi, throughput_product

EXIT_USAGE = 2
EXIT_INFEASIBLE = 3


def _positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (math.isfinite(value) and value > 0):
        raise argparse.ArgumentTypeError(f"must be a positive number, got {text!r}")
    return value


def _beta(text):
    value = _positive_float(text)
    if value > 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1], got {text!r}")
    return value


def _int_at_least(lo):
    def parse(text):
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
        if value < lo:
            raise argparse.ArgumentTypeError(f"must be >= {lo}, got {text!r}")
        return value

    return parse


def _range(text):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}")
    lo, hi = (_positive_float(p) for p in parts)
    if not lo < hi:
        raise argparse.ArgumentTypeError(f"need LO < HI, got {text!r}")
    return lo, hi


def _fmt(value, digits):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if digits is not None:
        value = round(value, digits)
    if float(value).is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def _json_value(value, digits):
    if isinstance(value, float) and digits is not None:
        return round(value, digits)
    return value


_FLAG_NAMES = {
    "beta_range": "--beta-range",
    "n_t_range": "--n-t-range",
    "grid_points": "--grid",
    "refine_tolerance": "--tol",
    "n_cap": "--n-cap",
    "n_min": "--n-min",
    "event_budget": "--events",
    "burn_in": "--burn-in",
    "join rate": "--lambda0",
}


def _name_flags(message: str) -> str:
    for field_name, flag in _FLAG_NAMES.items():
        message = message.replace(field_name, flag)
    return message


@contextlib.contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _write_table(rows, columns, fmt, out, digits):
    with _output(out) as fh:
        if fmt == "json":
            doc = [{c: _json_value(r[c], digits) for c in columns} for r in rows]
            fh.write(json.dumps(doc, indent=2) + "\n")
        else:
            fh.write(",".join(columns) + "\n")
            for r in rows:
                fh.write(",".join(_fmt(r[c], digits) for c in columns) + "\n")


def cmd_psi(args, parser):
    if args.n_min < 1:
        parser.error(f"argument --n-min: must be >= 1, got {args.n_min!r}")
    if args.n_max < args.n_min:
        parser.error("argument --n-max: must be >= --n-min")
    params = GroupScalingParams(args.beta, args.n_t)
    count = int(math.floor((args.n_max - args.n_min) / args.step + 1e-9)) + 1
    rows = []
    for k in range(count):
        n = args.n_min + k * args.step
        n = int(n) if float(n).is_integer() else n
        rows.append({"n": n, "psi": psi(n, params)})
    _write_table(rows, ["n", "psi"], args.format, args.out, args.round)


def cmd_ladder(args, parser):
    if not args.seed_scale > 1:
        parser.error(f"argument --seed-scale: must exceed 1, got {args.seed_scale!r}")
    try:
        result = ladder(GroupScalingParams(args.beta, args.seed_scale), args.seed_scale, args.levels)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    rows = [{"level": k, "scale": lvl.scale, "mode": lvl.mode} for k, lvl in enumerate(result.levels)]
    _write_table(rows, ["level", "scale", "mode"], args.format, args.out, args.round)


def cmd_simulate(args, parser):
    try:
        config = simulator.SimConfig(
            params=GroupScalingParams(args.beta, args.n_t),
            join_rate_lambda0=args.lambda0,
            n_cap=args.n_cap,
            event_budget=args.events,
            burn_in=args.burn_in,
            master_seed=args.seed,
            replicas=args.replicas,
        )
    except (simulator.ConfigError, DomainError) as exc:
        parser.error(_name_flags(str(exc)))
    hist, events = simulator.run(config, log=args.log is not None)
    reference = simulator.stationary_reference(config)
    tv = simulator.total_variation(hist.pmf(), reference)
    out = Path(args.out)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        hist.write_csv(fh)
    sidecar = {
        "config": config.to_json(),
        "weighting": hist.weighting,
        "total_weight": hist.total,
        "tv_distance": tv,
        "histogram": out.name,
    }
    if args.log is not None:
        with open(args.log, "w", encoding="utf-8", newline="") as fh:
            events.write_csv(fh)
        sidecar["event_log"] = Path(args.log).name
        sidecar["event_log_replica"] = 0
    out.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {out} (tv_distance={tv:.6g})")


def cmd_fit(args, parser):
    try:
        with open(args.input, encoding="utf-8", newline="") as fh:
            obs = fitting.Observations.read_csv(fh)
    except OSError as exc:
        print(f"error: cannot read --input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except fitting.FitError as exc:
        print(f"error: {args.input}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        config = fitting.FitConfig(
            beta_range=args.beta_range,
            n_t_range=args.n_t_range,
            grid_points=args.grid,
            refine_tolerance=args.tol,
            n_max_cut=args.n_max_cut,
            method=args.method,
        )
    except fitting.FitError as exc:
        parser.error(_name_flags(str(exc)))
    try:
        result = fitting.fit(obs, config)
    except fitting.UnidentifiableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except fitting.FitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = json.dumps(result.to_json(), indent=2, sort_keys=True) + "\n"
    if args.out is None or args.out == "-":
        sys.stdout.write(report)
    else:
        Path(args.out).write_text(report, encoding="utf-8")
    print(
        f"beta_hat={result.beta_hat:.6g} n_t_hat={result.n_t_hat:.6g} implied_mode={result.implied_mode}",
        file=sys.stderr if args.out in (None, "-") else sys.stdout,
    )


def cmd_bands(args, parser):
    rows = [
        {
            "name": b.name,
            "f_low": b.f_low,
            "f_high": b.f_high,
            "f_center": b.f_center,
            "dunbar_level": b.dunbar_level,
            "product": throughput_product(b),
        }
        for b in REFERENCE_BANDS
    ]
    columns = ["name", "f_low", "f_high", "f_center", "dunbar_level", "product"]
    with _output(args.out) as fh:
        if args.format == "json":
            fh.write(json.dumps(rows, indent=2) + "\n")
        else:
            fh.write(",".join(columns) + "\n")
            for r in rows:
                fh.write(",".join([r["name"]] + [_fmt(r[c], args.round) for c in columns[1:]]) + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="groupdyn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def output_flags(p, formats=True):
        if formats:
            p.add_argument("--format", choices=["csv", "json"], default="csv")
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument("--round", type=_int_at_least(0), default=None, metavar="DIGITS",
                       help="round real-valued output to DIGITS decimals")

    p = sub.add_parser("psi", help="tabulate the group-size density")
    p.add_argument("--beta", type=_beta, required=True)
    p.add_argument("--n-t", type=_positive_float, required=True)
    p.add_argument("--n-min", type=float, default=1.0)
    p.add_argument("--n-max", type=float, default=40.0)
    p.add_argument("--step", type=_positive_float, default=1.0)
    output_flags(p)
    p.set_defaults(func=cmd_psi)

    p = sub.add_parser("ladder", help="contention-scale hierarchy from a seed scale")
    p.add_argument("--beta", type=_beta, required=True)
    p.add_argument("--seed-scale", type=_positive_float, required=True)
    p.add_argument("--levels", type=_int_at_least(1), default=4)
    output_flags(p)
    p.set_defaults(func=cmd_ladder)

    p = sub.add_parser("simulate", help="birth-death simulation of one seeded group")
    p.add_argument("--beta", type=_beta, required=True)
    p.add_argument("--n-t", type=_positive_float, required=True)
    p.add_argument("--lambda0", type=_positive_float, default=1.0)
    p.add_argument("--events", type=_int_at_least(1), default=1_000_000)
    p.add_argument("--burn-in", type=_int_at_least(0), default=0)
    p.add_argument("--seed", type=_int_at_least(0), default=0)
    p.add_argument("--replicas", type=_int_at_least(1), default=1)
    p.add_argument("--n-cap", type=_int_at_least(3), default=None)
    p.add_argument("--out", required=True, help="histogram CSV path; sidecar JSON goes next to it")
    p.add_argument("--log", default=None, help="also write the event log of replica 0 to this CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="maximum-likelihood fit of an n,count histogram")
    p.add_argument("--input", required=True)
    p.add_argument("--beta-range", type=_range, default=(0.5, 1.0))
    p.add_argument("--n-t-range", type=_range, default=(2.0, 2000.0))
    p.add_argument("--grid", type=_int_at_least(8), default=24)
    p.add_argument("--tol", type=_positive_float, default=1e-6)
    p.add_argument("--n-max-cut", type=_int_at_least(3), default=None)
    p.add_argument("--method", choices=["mle", "lsq"], default="mle")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("bands", help="attention bands and their throughput products")
    output_flags(p)
    p.set_defaults(func=cmd_bands)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code = args.func(args, parser)
    except BrokenPipeError:
        return 0
    return code or 0


if __name__ == "__main__":
    sys.exit(main())
