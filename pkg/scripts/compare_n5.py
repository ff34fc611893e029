"""Simulation against the closed forms, N in {5, 10}, equal SNR 20 dB, p_a = 0.4."""

import numpy as np
from _common import budget_args, emit, parser

from sic_aloha.channel import EqualSnr
from sic_aloha.sim import ScenarioConfig

if __name__ == "__main__":
    ap = parser(__doc__, "results/compare.csv")
    ap.add_argument("--arrival-prob", type=float, default=0.4)
    args = ap.parse_args()
    slots, runs = budget_args(args)
    base = ScenarioConfig(arrival_prob=args.arrival_prob, channel=EqualSnr(20.0, 1.0),
                          n_slots=slots, n_runs=runs)
    points = [base.replace(n_nodes=n, tx_prob=float(p)) for n in (5, 10) for p in np.linspace(0.1, 1.0, 10)]
    emit(points, args)
