"""Deadline violation probability against G for two arrival rates."""

import numpy as np
from _common import budget_args, emit, parser

from sic_aloha.channel import EqualSnr
from sic_aloha.sim import ADRA, STANDARD, ScenarioConfig

if __name__ == "__main__":
    ap = parser(__doc__, "results/deadline_vs_g.csv")
    ap.add_argument("--adra-threshold", type=int, default=50)
    ap.add_argument("--nodes", type=int, default=40)
    args = ap.parse_args()
    slots, runs = budget_args(args)
    points = []
    for pa in (0.2, 0.8):
        base = ScenarioConfig(n_nodes=args.nodes, arrival_prob=pa, deadline_slots=5,
                              drop_on_deadline=True, channel=EqualSnr(20.0, 1.0),
                              n_slots=slots, n_runs=runs)
        for policy in (base, base.replace(policy=STANDARD),
                       base.replace(policy=ADRA, age_threshold=args.adra_threshold)):
            points += [policy.replace(tx_prob=g / args.nodes) for g in np.linspace(0.25, 3.0, 12)]
    emit(points, args)
