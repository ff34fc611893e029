"""Average AoI against transmission probability for SIC-RA, Standard and ADRA."""

import numpy as np
from _common import budget_args, emit, parser

from sic_aloha.channel import EqualSnr
from sic_aloha.sim import ADRA, STANDARD, ScenarioConfig

if __name__ == "__main__":
    ap = parser(__doc__, "results/aoi_vs_p.csv")
    ap.add_argument("--adra-threshold", type=int, default=50)
    ap.add_argument("--snr-db", type=float, default=20.0)
    args = ap.parse_args()
    slots, runs = budget_args(args)
    points = []
    for n, grid in ((5, np.linspace(0.05, 1.0, 20)), (50, [0.005, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.08, 0.1, 0.12, 0.15, 0.2])):
        base = ScenarioConfig(n_nodes=n, arrival_prob=0.4, deadline_slots=5, drop_on_deadline=True,
                              channel=EqualSnr(args.snr_db, 1.0), n_slots=slots, n_runs=runs)
        for policy in (base, base.replace(policy=STANDARD),
                       base.replace(policy=ADRA, age_threshold=args.adra_threshold)):
            points += [policy.replace(tx_prob=float(p)) for p in grid]
    emit(points, args)
