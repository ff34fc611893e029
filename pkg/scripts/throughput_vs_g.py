"""Saturated throughput against offered load G = N p for N = 50."""

import numpy as np
from _common import budget_args, emit, parser

from sic_aloha.channel import EqualSnr
from sic_aloha.sim import ADRA, STANDARD, ScenarioConfig

if __name__ == "__main__":
    ap = parser(__doc__, "results/throughput_vs_g.csv")
    ap.add_argument("--adra-threshold", type=int, default=50)
    ap.add_argument("--snr-db", type=float, default=40.0)
    args = ap.parse_args()
    slots, runs = budget_args(args)
    base = ScenarioConfig(n_nodes=50, arrival_prob=1.0, channel=EqualSnr(args.snr_db, 1.0),
                          n_slots=slots, n_runs=runs)
    points = []
    for policy in (base, base.replace(policy=STANDARD),
                   base.replace(policy=ADRA, age_threshold=args.adra_threshold)):
        points += [policy.replace(tx_prob=g / 50) for g in np.linspace(0.25, 3.0, 12)]
    emit(points, args)
