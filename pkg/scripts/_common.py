import argparse
import sys
from pathlib import Path

from sic_aloha.experiments import RESULT_COLUMNS, sweep_rows, write_csv


def parser(doc, default_out):
    ap = argparse.ArgumentParser(description=doc)
    ap.add_argument("--out", default=default_out)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--slots", type=int, default=100_000)
    ap.add_argument("--runs", type=int, default=10)
    ap.add_argument("--quick", action="store_true", help="10^4 slots, 2 runs")
    return ap


def budget_args(args):
    return (10_000, 2) if args.quick else (args.slots, args.runs)


def emit(points, args, with_analytic=True):
    rows = sweep_rows(points, args.jobs, with_analytic)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        write_csv(RESULT_COLUMNS, rows, fh)
    print(f"wrote {len(rows)} rows to {args.out}", file=sys.stderr)
