"""``sic-aloha`` command line.

Subcommands ``analyze``, ``simulate``, ``sweep`` and ``compare`` all read a
flat config (see ``sic_aloha.config``) and write CSV to ``--out`` or stdout.
Exit codes: 0 success, 1 comparison bound exceeded in strict mode, 2 config
error.
"""

from __future__ import annotations

import argparse
import contextlib
import sys

from . import config as cfgmod
from . import experiments as ex
from .sim import ConfigError, Simulator

EXIT_OK, EXIT_BOUND, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key = value config file")
    common.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                        help="override one config key (repeatable, applied after --config)")
    common.add_argument("--seed", type=int, help="master seed, overrides sim.seed")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    common.add_argument("--out", metavar="PATH", help="CSV destination (default stdout)")
    common.add_argument("--trace", metavar="PATH", help="per-slot trace of run 0 (simulate only)")

    parser = argparse.ArgumentParser(prog="sic-aloha", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="closed-form metrics per point")
    sub.add_parser("simulate", parents=[common], help="simulate the base scenario")
    sub.add_parser("sweep", parents=[common], help="simulate every sweep point")
    sub.add_parser("compare", parents=[common], help="simulation against closed forms")
    return parser


def load(args):
    values = {}
    if args.config:
        try:
            with open(args.config) as fh:
                values.update(cfgmod.parse_text(fh.read(), args.config))
        except OSError as exc:
            raise ConfigError("--config", str(exc)) from None
    for item in args.set:
        key, value = cfgmod.parse_assignment(item)
        values[key] = value
    cfg, spec, opts = cfgmod.build(values)
    if args.seed is not None:
        cfg, spec = cfgmod.with_seed(cfg, spec, args.seed)
    if args.jobs < 1:
        raise ConfigError("--jobs", "must be >= 1")
    return cfg, spec, opts


def _points(cfg, spec):
    return spec.points() if spec is not None else [cfg]


def write_trace(cfg, path):
    sim = Simulator(cfg, 0, trace=True)
    sim.advance(cfg.n_slots)
    n = cfg.n_nodes
    with open(path, "w") as fh:
        fh.write(",".join(["slot", "n_tx", "n_decoded"] + [f"aoi_{i}" for i in range(n)]) + "\n")
        for t in range(cfg.n_slots):
            vals = [t, sim.trace_ntx[t], sim.trace_ndec[t], *sim.trace_aoi[t]]
            fh.write(",".join(str(int(v)) for v in vals) + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, spec, opts = load(args)
        points = _points(cfg, spec) if args.command != "simulate" else [cfg]
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    code = EXIT_OK
    if args.command == "analyze":
        columns = ex.ANALYZE_COLUMNS
        rows = [ex.analyze_point(p) for p in points]
        for r in rows:
            if r.get("unstable"):
                print(f"warning: unstable queue at n_nodes={r['n_nodes']} tx_prob={r['tx_prob']!r} "
                      f"arrival_prob={r['arrival_prob']!r}", file=sys.stderr)
    else:
        if args.trace:
            if args.command != "simulate":
                print("config error: --trace: only supported by simulate", file=sys.stderr)
                return EXIT_CONFIG
            write_trace(cfg, args.trace)
        reports = ex.run_points(points, args.jobs)
        compare = args.command == "compare"
        result_rows = [r for rep in reports for r in ex.report_rows(rep, compare)]
        columns = ex.RESULT_COLUMNS
        rows = [r.as_dict() for r in result_rows]
        if compare:
            worst, where = ex.max_abs_z(result_rows)
            if where is None:
                print("summary: no metric has a closed form in this regime", file=sys.stderr)
            else:
                print(f"summary: max |sim - analytic| / stderr = {worst:.3f} "
                      f"(metric {where.metric}, tx_prob={where.params['tx_prob']!r}, "
                      f"n_nodes={where.params['n_nodes']}); bound {opts.z_bound:g}, "
                      f"mode {opts.mode}", file=sys.stderr)
                if worst > opts.z_bound and opts.mode == "strict":
                    code = EXIT_BOUND

    with (open(args.out, "w", newline="") if args.out else contextlib.nullcontext(sys.stdout)) as fh:
        ex.write_csv(columns, rows, fh)
    return code


if __name__ == "__main__":
    sys.exit(main())
