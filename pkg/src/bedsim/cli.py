"""Command line entry point: ``bedsim {simulate,batch,analytics,validate}``.

Exit codes: 0 success, 1 validation failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from bedsim import io
from bedsim.analytics import DEFAULT_TOLERANCES, analytic_oracle, validate
from bedsim.batch import run_batch
from bedsim.config import (
    STANDARD_SEEDS,
    STANDARD_STATUSES,
    STANDARD_UNTILS,
    BatchSpec,
    add_model_arguments,
    add_simulation_arguments,
    config_from_mapping,
    config_from_namespace,
    parse_number,
)
from bedsim.errors import BedSimError, ConfigError
from bedsim.metrics import summarize
from bedsim.model import available_backends, simulate_log

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG = 0, 1, 2


def _float_or_none(text, name):
    return None if text is None else parse_number(name, text)


def _tolerances(pairs) -> dict:
    tol = {}
    for pair in pairs or []:
        name, _, value = pair.partition("=")
        if name not in DEFAULT_TOLERANCES or not value:
            raise ConfigError("tolerance", f"expected NAME=VALUE with NAME in {sorted(DEFAULT_TOLERANCES)}")
        try:
            tol[name] = float(value)
        except ValueError:
            raise ConfigError("tolerance", f"not a number: {value!r}") from None
    return tol


def _out_dir(path):
    if path is None:
        return None
    out = Path(path)
    if not out.is_dir():
        raise io.IoError(f"output directory {out} does not exist")
    return out


def _simulate_and_compare(args):
    config = config_from_namespace(args)
    out = _out_dir(args.out_dir)
    sim = simulate_log(config.params, config.hospital_status, config.seed, config.until,
                       rate_mode=config.rate_mode, backend=args.backend)
    responses, counts = summarize(sim, warmup=config.warmup)
    analytic = analytic_oracle(config.params, mu=_float_or_none(args.oracle_mu, "oracle_mu"))
    report = validate(responses, analytic.machine_repair, analytic.erlang,
                      _tolerances(getattr(args, "tolerance", None)))
    doc = io.summary_document(responses, analytic, report, config, counts)
    if out is not None:
        io.write_json(doc, out / "summary.json")
        io.emit_timeseries(sim, out / "timeseries.csv")
        if not args.no_events:
            io.emit_event_log(sim, out / "events.csv", with_fel=not args.no_fel)
    return doc, report


def cmd_simulate(args) -> int:
    doc, _ = _simulate_and_compare(args)
    json.dump(io._json_safe(doc), sys.stdout, indent=2)
    print()
    return EXIT_OK


def cmd_validate(args) -> int:
    _, report = _simulate_and_compare(args)
    for c in report.comparisons:
        mark = "PASS" if c.passed else "FAIL"
        print(f"{mark}  {c.name:<22} sim={c.simulated:.6g}  analytic={c.analytic:.6g}  "
              f"abs={c.abs_deviation:.3g}  rel={c.rel_deviation:.3g} (tol {c.tolerance:g})")
    print(f"verdict: {report.verdict}")
    return EXIT_OK if report.passed else EXIT_VALIDATION


def cmd_analytics(args) -> int:
    values = {k: getattr(args, k) for k in (
        "population", "sickness_rate", "hospital_probability", "bed_count",
        "mu1", "mu2", "r_lo", "r_hi") if getattr(args, k) is not None}
    params = config_from_mapping(values).params
    result = analytic_oracle(params, mu=_float_or_none(args.mu, "mu"),
                             lambda_h=_float_or_none(args.lambda_h, "lambda_h"))
    json.dump(io._json_safe(result.to_dict()), sys.stdout, indent=2)
    print()
    return EXIT_OK


def cmd_batch(args) -> int:
    base = config_from_namespace(args)
    if args.spec:
        spec = BatchSpec.from_file(args.spec, base)
    else:
        spec = BatchSpec.cross(args.untils, args.statuses, args.seeds, base)
    out = _out_dir(args.out_dir)
    result = run_batch(spec, jobs=args.jobs, backend=args.backend, out_dir=out,
                       write_events=args.events, with_fel=not args.no_fel)
    names = ["until", "status", "seed", "avg_sick", "avg_beds", "p_empty", "avg_time"]
    print("  ".join(f"{n:>10}" for n in names))
    for r in result.runs:
        if r.ok:
            c, s = r.config, r.responses
            print("  ".join(f"{v:>10}" for v in (
                f"{c.until:g}", c.hospital_status.value, c.seed, f"{s.avg_sick:.4f}",
                f"{s.avg_beds:.4f}", f"{s.p_hospital_empty:.5f}", f"{s.avg_sickness_time:.4f}")))
        else:
            print(f"error: {r.entry}: {r.error}")
    m = result.mean
    if m:
        print("  ".join(f"{v:>10}" for v in (
            "mean", "", "", f"{m['avg_sick']:.4f}", f"{m['avg_beds']:.4f}",
            f"{m['p_hospital_empty']:.5f}", f"{m['avg_sickness_time']:.4f}")))
    return EXIT_OK if not result.failed else EXIT_CONFIG


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bedsim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def output_options(p):
        p.add_argument("--out-dir", default=None, help="existing directory for output files")
        p.add_argument("--no-fel", action="store_true", help="leave the FEL column empty")
        p.add_argument("--backend", choices=available_backends(), default=None)

    for name, help_text in (("simulate", "run one configuration"),
                            ("validate", "run one configuration and compare with queueing models")):
        p = sub.add_parser(name, help=help_text)
        add_simulation_arguments(p)
        output_options(p)
        p.add_argument("--no-events", action="store_true", help="skip events.csv")
        p.add_argument("--oracle-mu", default=None,
                       help="service rate for the finite-source model (default 1/E[stay])")
        if name == "validate":
            p.add_argument("--tolerance", action="append", metavar="NAME=REL",
                           help="override a relative tolerance, e.g. avg_beds=0.1")
        p.set_defaults(func=cmd_simulate if name == "simulate" else cmd_validate)

    p = sub.add_parser("batch", help="cross product of run lengths, statuses and seeds")
    add_simulation_arguments(p)
    output_options(p)
    p.add_argument("--untils", nargs="+", type=float, default=list(STANDARD_UNTILS))
    p.add_argument("--statuses", nargs="+", default=[s.value for s in STANDARD_STATUSES])
    p.add_argument("--seeds", nargs="+", type=int, default=list(STANDARD_SEEDS))
    p.add_argument("--spec", default=None, help="JSON batch spec (overrides the cross product flags)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--events", action="store_true", help="also write per-run events.csv")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("analytics", help="closed-form queueing results only")
    add_model_arguments(p)
    p.add_argument("--mu", default=None, help="service rate (default 1/E[stay] without rejections)")
    p.add_argument("--lambda-h", dest="lambda_h", default=None,
                   help="hospital arrival rate (default p * effective arrival rate)")
    p.set_defaults(func=cmd_analytics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except io.IoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BedSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
