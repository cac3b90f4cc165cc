"""Command line front end: ``plan``, ``simulate``, ``bound`` and ``couple``.

SNRs are given in dB on the command line and converted to linear here;
nothing below this module sees dB.  Exit status is 0 on success, 2 for an
invalid configuration and 3 when no plan meets the target.
"""

import argparse
import json
import logging
import sys

import numpy as np

from . import __version__
from .channel import ChannelConfig, db_to_linear, linear_to_db
from .lowprec import Precision
from .montecarlo import SweepSpec, coupled_run, estimate_ser, sweep_csv
from .planner import PlanInfeasible, PlannerInput, make_plan
from .sk import SkConfig, sk_error_bound, sk_error_bound_tight, sk_error_exact
from .zsk import PlanError, ZoomPlan, zsk_error_bound

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 2, 3

log = logging.getLogger("zoomsk")


class ConfigError(ValueError):
    pass


def parse_snr_grid(values):
    """``["1", "2.5"]``, ``["0,1,2"]`` or ``["0:3:0.5"]`` (inclusive) to a list of dB values."""
    out = []
    for v in values:
        for part in v.split(","):
            part = part.strip()
            if not part:
                continue
            if ":" in part:
                fields = part.split(":")
                if len(fields) != 3:
                    raise ConfigError(f"SNR range must be start:stop:step, got {part!r}")
                a, b, s = map(float, fields)
                if s <= 0 or b < a:
                    raise ConfigError(f"empty SNR range {part!r}")
                out.extend(np.round(a + s * np.arange(int(np.floor((b - a) / s + 1e-9)) + 1), 10))
            else:
                out.append(float(part))
    if not out:
        raise ConfigError("no SNR values given")
    return [float(x) for x in out]


def _load_plan(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read plan file {path}: {exc}") from exc
    return ZoomPlan.from_dict(data), data


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_plan(args):
    if args.n is None or args.bits is None:
        raise ConfigError("plan needs --n and --bits")
    inp = PlannerInput(args.n, args.bits, args.pe_target, args.epsilon)
    snr, plan, report = make_plan(inp, args.precision, args.min_zoom_bits)
    meta = {"n": args.n, "snr_target_db": float(linear_to_db(snr)), "pe_target": args.pe_target,
            "epsilon": args.epsilon, "precision": args.precision.value,
            "min_zoom_bits": args.min_zoom_bits, "zsk_bound": report.zsk_bound,
            "sk_bound": report.sk_bound, "flags": report.flags, "version": __version__}
    text = plan.to_json(**meta) + "\n"
    print(plan.describe())
    print(f"SNR_target = {linear_to_db(snr):.4f} dB, bound = {report.zsk_bound:.3e} "
          f"(SK {report.sk_bound:.3e}), zoom terms below epsilon: {not any(report.flags)}")
    if args.out:
        _emit(text, args.out)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _config_from_args(args, plan_data=None):
    n = args.n if args.n is not None else (plan_data or {}).get("n")
    bits = args.bits if args.bits is not None else (plan_data or {}).get("bits")
    if n is None or bits is None:
        raise ConfigError("need --n and --bits (or a plan file that records them)")
    return SkConfig(n, bits, ChannelConfig(1.0), args.precision)


def cmd_simulate(args):
    plan, plan_data = (None, None)
    if args.plan_file:
        plan, plan_data = _load_plan(args.plan_file)
    scheme = args.scheme or ("zsk" if plan is not None else "sk")
    cfg = _config_from_args(args, plan_data)
    if scheme == "zsk" and plan is None:
        raise ConfigError("zsk needs --plan-file")
    if scheme == "sk":
        plan = None
    spec = SweepSpec(scheme, cfg, parse_snr_grid(args.snr_db), args.trials, args.seed, plan,
                     args.max_errors)
    _emit(sweep_csv(spec, estimate_ser(spec, args.workers)), args.out)
    return EXIT_OK


def cmd_bound(args):
    plan, plan_data = (None, None)
    if args.plan_file:
        plan, plan_data = _load_plan(args.plan_file)
    cfg = _config_from_args(args, plan_data)
    plan = plan or ZoomPlan.plain(cfg.rate_bits)
    plan.check(cfg.n_iters, cfg.rate_bits)
    lines = ["# " + json.dumps({"n": cfg.n_iters, "bits": cfg.rate_bits, "plan": plan.to_dict(),
                                "version": __version__}),
             "snr_db,sk_exact,sk_tight,sk_capacity_form,zsk_bound"]
    for db in parse_snr_grid(args.snr_db):
        c = cfg.with_snr(float(db_to_linear(db)))
        lines.append(f"{db:.4f},{sk_error_exact(c):.6e},{sk_error_bound_tight(c):.6e},"
                     f"{sk_error_bound(c):.6e},{zsk_error_bound(c, plan):.6e}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_couple(args):
    if not args.plan_file:
        raise ConfigError("couple needs --plan-file")
    plan, plan_data = _load_plan(args.plan_file)
    cfg = _config_from_args(args, plan_data)
    plan.check(cfg.n_iters, cfg.rate_bits)
    rng = np.random.Generator(np.random.Philox(key=[args.seed, 0xC0]))
    lines = ["# " + json.dumps({"n": cfg.n_iters, "bits": cfg.rate_bits, "plan": plan.to_dict(),
                                "seed": args.seed, "trials": args.trials, "tol": args.tol,
                                "version": __version__}),
             "snr_db,trials,all_zooms_ok,coupled,max_rel_dev,decode_agree"]
    passed = True
    for db in parse_snr_grid(args.snr_db):
        c = cfg.with_snr(float(db_to_linear(db)))
        ok = coupled = agree = 0
        worst = 0.0
        for t, msg in enumerate(rng.integers(0, cfg.m, size=args.trials)):
            rep = coupled_run(c, plan, int(msg), args.seed, stream_id=t)
            rep.tol = args.tol
            agree += rep.decode_agree
            if rep.all_zooms_ok:
                ok += 1
                coupled += rep.coupled
                worst = max(worst, rep.max_rel_dev)
        passed &= coupled == ok
        lines.append(f"{db:.4f},{args.trials},{ok},{coupled},{worst:.3e},{agree}")
    _emit("\n".join(lines) + "\n", args.out)
    print(f"coupling {'PASS' if passed else 'FAIL'} at tol {args.tol:g}", file=sys.stderr)
    return EXIT_OK


def _precision(value):
    try:
        return Precision.parse(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser():
    parser = argparse.ArgumentParser(prog="zoomsk", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, snr=True):
        p.add_argument("--n", type=int, help="channel uses N")
        p.add_argument("--bits", type=int, help="message bits K (M = 2**K)")
        p.add_argument("--precision", type=_precision, default=Precision.DOUBLE,
                       help="half, single or double")
        p.add_argument("--plan-file", help="JSON plan as written by `plan --out`")
        p.add_argument("--out", help="output file (default stdout)")
        if snr:
            p.add_argument("--snr-db", nargs="+", required=True,
                           help="values, comma lists or start:stop:step ranges (write --snr-db=-1:1:0.5 "
                                "when the first value is negative)")

    p = sub.add_parser("plan", help="choose zoom sizes and iterations for a target error")
    common(p, snr=False)
    p.set_defaults(precision=Precision.HALF)
    p.add_argument("--pe-target", type=float, default=1e-6)
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--min-zoom-bits", type=int, default=1)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", help="Monte-Carlo SER sweep, CSV output")
    common(p)
    p.add_argument("--scheme", choices=["sk", "zsk"])
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-errors", type=int)
    p.add_argument("--workers", type=int, help="threads (default $ZOOMSK_WORKERS or 1)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bound", help="analytic SK and ZSK error bounds over an SNR grid")
    common(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("couple", help="shared-noise SK/ZSK coupling check (binary64)")
    common(p)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_couple)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except PlanInfeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, PlanError, ValueError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
