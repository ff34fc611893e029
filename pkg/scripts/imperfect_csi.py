"""SIC-RA under channel-estimation error sigma_eps^2 in {0, 0.05, 0.2}."""

from _common import budget_args, emit, parser

from sic_aloha.channel import EqualSnr
from sic_aloha.sim import ScenarioConfig

if __name__ == "__main__":
    ap = parser(__doc__, "results/imperfect_csi.csv")
    args = ap.parse_args()
    slots, runs = budget_args(args)
    base = ScenarioConfig(n_nodes=40, arrival_prob=0.8, deadline_slots=5, drop_on_deadline=True,
                          channel=EqualSnr(20.0, 1.0), n_slots=slots, n_runs=runs)
    points = [base.replace(tx_prob=g / 40, sigma_eps_sq=s)
              for s in (0.0, 0.05, 0.2) for g in (0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0)]
    emit(points, args)
