"""Command-line interface.

Subcommands: simulate, sweep, cost, iso, estimate-backplane.
Exit codes: 0 success, 2 config error, 3 numerical failure, 4 partial sweep.
"""
import argparse
import json
import os
import sys

from . import costmodel, geometry, harness
from .errors import ConfigError, NumericalError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_PARTIAL = 4


def _add_config_arg(p):
    p.add_argument("--config", required=True, help="scenario config JSON")
    p.add_argument("--dump-config", metavar="PATH",
                   help="write the fully resolved config (defaults included)")


def _load_config(args):
    config = geometry.ScenarioConfig.from_json(args.config)
    if getattr(args, "dump_config", None):
        config.dump_json(args.dump_config)
    return config


def cmd_simulate(args):
    config = _load_config(args)
    result = harness.run_scenario(config, args.algo, seed=args.seed)
    payload = {
        "algorithm": result.algorithm,
        "sum_rate_bps_hz": result.sum_rate_bps_hz,
        "num_antennas": result.surface.M,
        "num_panels": result.surface.P,
        "cost": result.cost.to_dict(),
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_sweep(args):
    config = _load_config(args)
    spec = harness.SweepSpec.from_json(args.spec, base=config)
    rows, failures = harness.run_sweep(spec, jobs=args.jobs)
    harness.write_sweep_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    if not args.no_plot and rows:
        from . import plotting
        fig_path = args.fig or os.path.splitext(args.out)[0] + ".png"
        plotting.render_sweep_figure(rows, fig_path, target_rate=args.target)
        print(f"wrote figure to {fig_path}")
    for key, msg in sorted(failures.items()):
        print(f"FAILED cell {key}: {msg}", file=sys.stderr)
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_cost(args):
    config = _load_config(args)
    surface = geometry.build_surface(config)
    params = costmodel.CostParams.from_config(config)
    report = costmodel.cost_report(args.algo, surface.Mp, config.num_users,
                                   config.outputs_per_panel, surface.Ap,
                                   surface.P, params)
    print(report.to_json())
    return EXIT_OK


def cmd_iso(args):
    rows = harness.read_sweep_csv(args.infile)
    points, notices = harness.iso_rate_points(rows, args.target)
    for n in notices:
        print(f"notice: {n}", file=sys.stderr)
    payload = [p.__dict__ for p in points]
    print(json.dumps(payload, indent=2))
    return EXIT_OK


def cmd_estimate_backplane(args):
    rate = costmodel.raw_backplane_rate(args.antennas, args.bits, args.bandwidth)
    print(json.dumps({
        "antennas": args.antennas,
        "bits_per_component": args.bits,
        "signal_bandwidth_hz": args.bandwidth,
        "raw_backplane_bps": rate,
        "raw_backplane_tbps": rate / 1e12,
    }, indent=2))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lisim",
        description="Panelized large-intelligent-surface uplink simulator "
                    "and implementation-cost toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario and print rate + costs")
    _add_config_arg(p)
    p.add_argument("--algo", required=True, choices=["rmf", "iic"])
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run a design-space sweep to CSV (+ figure)")
    _add_config_arg(p)
    p.add_argument("--spec", required=True, help="sweep spec JSON")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--fig", help="figure path (default: CSV path with .png)")
    p.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    p.add_argument("--target", type=float, default=None,
                   help="highlight cells at/above this rate in the figure")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("cost", help="cost report only, no channel generation")
    _add_config_arg(p)
    p.add_argument("--algo", required=True, choices=["rmf", "iic"])
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("iso", help="extract iso-rate design points from a sweep CSV")
    p.add_argument("--in", dest="infile", required=True, help="sweep CSV")
    p.add_argument("--target", type=float, required=True, help="rate target [bps/Hz]")
    p.set_defaults(func=cmd_iso)

    p = sub.add_parser("estimate-backplane",
                       help="raw (unreduced) backplane data-rate estimate")
    p.add_argument("--antennas", type=int, required=True)
    p.add_argument("--bits", type=int, required=True)
    p.add_argument("--bandwidth", type=float, required=True)
    p.set_defaults(func=cmd_estimate_backplane)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
