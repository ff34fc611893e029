"""Acceptance criteria, one test each.

Every test records a ``criterion k: PASS|FAIL ...`` line; the lines are
printed together at the end of the pytest run (see ``conftest.py``) and also
when this file is run directly with ``python tests/test_acceptance.py``.
"""

import itertools
import math
import subprocess
import sys

import numpy as np
import pytest
from scipy import stats

from sic_aloha import analytics as an
from sic_aloha.analytics import LinkBudget
from sic_aloha.channel import EqualSnr
from sic_aloha.experiments import run_points
from sic_aloha.oracles import equal_snr_slots, saturated_success
from sic_aloha.sim import ADRA, SIC_RA, STANDARD, ScenarioConfig, Simulator

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script from elsewhere
    ACCEPTANCE_LINES = []


def record(k, ok, detail):
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def z(sim, ref, se):
    if sim == ref:
        return 0.0
    return (sim - ref) / se if se > 0 else math.copysign(math.inf, sim - ref)


# 1 -----------------------------------------------------------------------------

GRID_1 = list(itertools.product([1, 2, 3, 4], [0.5, 1.0, 3.0], [0.01, 0.1, 1.0]))


def test_criterion_1_closed_forms_vs_monte_carlo():
    rng = np.random.default_rng(101)
    rank_bad, out_bad = [], []
    n_rank = 0
    for m, gamma, x in GRID_1:
        b = LinkBudget(x, gamma, m, 1.0)
        mc = equal_snr_slots(m, gamma, x, 10**6, rng)
        for i in range(1, m + 1):
            n_rank += 1
            zz = z(mc.rank_pass[i - 1], an.rank_success_equal(i, m, b), mc.rank_pass_se[i - 1])
            if not abs(zz) < 3:
                rank_bad.append((gamma, f"m={m},i={i},g={gamma},x={x}: z={zz:.0f}"))
        zz = z(mc.outage, an.outage_equal(m, b), mc.outage_se)
        if not abs(zz) < 3:
            out_bad.append((abs(zz), f"m={m},g={gamma},x={x}: z={zz:.0f}"))
    gammas = sorted({g for g, _ in rank_bad})
    ok = record(1, not rank_bad and not out_bad,
                f"10^6 slots per point; rank terms outside 3 SE: {len(rank_bad)}/{n_rank} "
                f"(gamma in {gammas}); averaged outage outside 3 SE: {len(out_bad)}/{len(GRID_1)}"
                + (f", worst {max(out_bad)[1]}" if out_bad else ""))
    assert ok, [t for _, t in rank_bad + out_bad]


# 2 -----------------------------------------------------------------------------

def test_criterion_2_order_probability_normalisation():
    lams = (1.0, 2.0, 3.0, 5.0, 8.0)
    worst = max(abs(sum(an.order_probability(p) for p in itertools.permutations(lams[:m])) - 1)
                for m in range(1, 6))
    ok = record(2, worst < 1e-12, f"max |sum - 1| = {worst:.2e} for m <= 5")
    assert ok


# 3 -----------------------------------------------------------------------------

P_GRID_3 = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]


def _criterion_3_points():
    base = ScenarioConfig(arrival_prob=0.4, deadline_slots=5, channel=EqualSnr(20.0, 1.0),
                          n_slots=100_000, n_runs=10, seed=3)
    return [base.replace(n_nodes=n, tx_prob=p) for n in (5, 10) for p in P_GRID_3]


def test_criterion_3_sim_vs_analytic():
    reports = run_points(_criterion_3_points())
    bad = []
    n_stable = 0
    for rep in reports:
        cfg = rep.config
        ar = an.analytic_report(cfg.budget())
        checks = [("q_s", ar.q_s), ("throughput", ar.throughput),
                  ("deadline_violation", ar.deadline_violation)]
        if not ar.unstable:
            n_stable += 1
            checks.append(("avg_aoi", ar.avg_aoi))
        for metric, ref in checks:
            zz = z(rep.mean(metric), ref, rep.stderr(metric))
            if not abs(zz) < 4:
                bad.append(f"{metric}(N={cfg.n_nodes},p={cfg.tx_prob}) z={zz:.0f}")
    ok = record(3, not bad, f"{len(reports)} points, {n_stable} with a stable queue; "
                            f"{len(bad)} comparisons with |z| >= 4"
                            + (f", e.g. {'; '.join(bad[:4])}" if bad else ""))
    assert ok, bad


def test_criterion_3_simulator_matches_sampled_outage():
    # same scenario against a model that samples the outage instead of using the
    # closed form; isolates whether a criterion 3 failure is the simulator's
    rng = np.random.default_rng(33)
    reports = run_points(_criterion_3_points())
    worst = 0.0
    for rep in reports:
        cfg = rep.config
        q_ref, s_ref = saturated_success(cfg.n_nodes, cfg.tx_prob, 1.0, 0.01, 200_000, rng)
        # the oracle has its own sampling error
        for metric, ref, ref_se in (("q_s", q_ref, 0.002 / cfg.n_nodes), ("throughput", s_ref, 0.002)):
            zz = (rep.mean(metric) - ref) / math.hypot(rep.stderr(metric), ref_se)
            worst = max(worst, abs(zz))
    assert worst < 4


# 4, 5 --------------------------------------------------------------------------

G_GRID = [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0]


def _saturated_throughput(policy):
    base = ScenarioConfig(n_nodes=50, arrival_prob=1.0, policy=policy, channel=EqualSnr(40.0, 1.0),
                          n_slots=50_000, n_runs=3, seed=4)
    reports = run_points([base.replace(tx_prob=g / 50) for g in G_GRID])
    return np.array([r.throughput for r in reports])


@pytest.fixture(scope="module")
def throughput_curves():
    return {STANDARD: _saturated_throughput(STANDARD), SIC_RA: _saturated_throughput(SIC_RA)}


def test_criterion_4_standard_ceiling(throughput_curves):
    s = throughput_curves[STANDARD]
    best = s.max()
    ok = record(4, 0.33 <= best <= 0.39,
                f"Standard max throughput {best:.4f} at G={G_GRID[int(s.argmax())]} (target [0.33, 0.39])")
    assert ok


def test_criterion_5_sic_gain(throughput_curves):
    s, sic = throughput_curves[STANDARD].max(), throughput_curves[SIC_RA].max()
    ok = record(5, sic >= 2.0 * s, f"SIC-RA max {sic:.4f} vs Standard max {s:.4f}, ratio {sic / s:.2f} (need >= 2)")
    assert ok


# 6 -----------------------------------------------------------------------------

P_GRID_6 = [0.005, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.08, 0.1, 0.12, 0.15, 0.2]
ADRA_THRESHOLDS = (25, 50, 100)


def test_criterion_6_aoi_dominance():
    base = ScenarioConfig(n_nodes=50, arrival_prob=0.4, deadline_slots=5, drop_on_deadline=True,
                          channel=EqualSnr(20.0, 1.0), n_slots=50_000, n_runs=3, seed=6)
    variants = [base, base.replace(policy=STANDARD)] + [
        base.replace(policy=ADRA, age_threshold=t) for t in ADRA_THRESHOLDS]
    aoi = {}
    for k, v in enumerate(variants):
        reps = run_points([v.replace(tx_prob=p) for p in P_GRID_6])
        aoi[k] = np.array([r.avg_aoi for r in reps])
    sic = aoi[0]
    others = np.vstack([aoi[k] for k in range(1, len(variants))])
    dominated = np.all(sic[None, :] <= others)
    floor = sic.min()
    ok = record(6, bool(dominated) and floor < 50,
                f"SIC-RA AoI <= Standard and ADRA(thr {ADRA_THRESHOLDS}) at "
                f"{int(np.sum(np.all(sic[None, :] <= others, axis=0)))}/{len(P_GRID_6)} points; "
                f"min SIC-RA AoI {floor:.1f} at p={P_GRID_6[int(sic.argmin())]} (need < 50)")
    assert ok


# 7 -----------------------------------------------------------------------------

SIGMAS = (0.0, 0.05, 0.2)


def test_criterion_7_imperfect_csi_monotone():
    base = ScenarioConfig(n_nodes=40, arrival_prob=0.8, deadline_slots=5, drop_on_deadline=True,
                          channel=EqualSnr(20.0, 1.0), n_slots=50_000, n_runs=3, seed=7)
    sweep = [base.replace(tx_prob=p) for p in (0.01, 0.02, 0.04, 0.06, 0.1, 0.15)]
    sweep += [base.replace(tx_prob=g / 40) for g in (0.5, 1.0, 1.5, 2.0, 3.0)]
    violations = []
    for point in sweep:
        reps = run_points([point.replace(sigma_eps_sq=s) for s in SIGMAS])
        aoi = [r.avg_aoi for r in reps]
        pd = [r.deadline_violation for r in reps]
        sth = [r.throughput for r in reps]
        if not (np.all(np.diff(aoi) >= 0) and np.all(np.diff(pd) >= 0) and np.all(np.diff(sth) <= 0)):
            violations.append(f"p={point.tx_prob:.4g}")
    limit = max(abs(an.outage_equal_imperfect(m, LinkBudget(x, g, m, 1.0, csi_v=math.inf))
                    - an.outage_equal(m, LinkBudget(x, g, m, 1.0)))
                for m in range(1, 11) for g in (0.5, 1.0, 3.0) for x in (0.01, 0.1, 1.0))
    ok = record(7, not violations and limit < 1e-12,
                f"{len(sweep)} points x sigma_eps^2 {SIGMAS}: {len(violations)} monotonicity violations; "
                f"perfect-CSI limit max diff {limit:.1e}")
    assert ok, violations


# 8 -----------------------------------------------------------------------------

def _queue_case(runs):
    return ScenarioConfig(n_nodes=1, tx_prob=0.6, arrival_prob=0.4, channel=EqualSnr(10.0, 1.0),
                          n_slots=100_000, n_runs=runs, seed=8)


THIN = 25


def test_criterion_8_queueing_law():
    cfg = _queue_case(20)
    budget = cfg.budget()
    q_s = an.success_update_prob(budget)
    # consecutive delays are correlated; keep every THIN-th one
    delays = []
    qprops = []
    for k in range(cfg.n_runs):
        sim = Simulator(cfg, k, delay_log=cfg.n_slots)
        sim.advance(cfg.n_slots)
        delays.append(sim.logged_delays()[::THIN])
        hist = sim.result().qsize_hist
        qprops.append(hist / hist.sum())
    delays = np.concatenate(delays)

    pmf = an.delay_pdf(budget, q_s, np.arange(1, 31))
    observed = np.bincount(np.minimum(delays, 31), minlength=32)[1:32].astype(float)
    expected = np.append(pmf, 1 - pmf.sum()) * len(delays)
    # merge the tail until every expected count is at least 5
    while expected[-1] < 5:
        expected[-2] += expected[-1]
        observed[-2] += observed[-1]
        expected, observed = expected[:-1], observed[:-1]
    pval = stats.chisquare(observed, expected).pvalue

    qprops = np.array(qprops)
    theory = an.queue_distribution(budget, q_s)
    j_max = int(np.searchsorted(-theory, -1e-3))
    mean = qprops[:, :j_max].mean(axis=0)
    se = qprops[:, :j_max].std(axis=0, ddof=1) / math.sqrt(cfg.n_runs)
    zq = (mean - theory[:j_max]) / se
    ok = record(8, pval > 0.01 and np.all(np.abs(zq) < 3),
                f"delay chi-square p={pval:.3f} on {len(delays)} thinned delays "
                f"(rho={an.queue_load(budget, q_s):.3f}); queue sizes j<{j_max}: max |z|={np.abs(zq).max():.2f}")
    assert ok


# 9 -----------------------------------------------------------------------------

def test_criterion_9_determinism(tmp_path):
    args = ["sweep", "--set", "sweep.axis=p", "--set", "sweep.values=0.1,0.3",
            "--set", "sim.n_slots=5000", "--set", "sim.n_runs=3", "--seed", "11"]
    blobs = []
    for k, jobs in enumerate(("1", "1", "3")):
        out = tmp_path / f"{k}.csv"
        subprocess.run([sys.executable, "-m", "sic_aloha.cli", *args, "--jobs", jobs, "--out", str(out)],
                       check=True)
        blobs.append(out.read_bytes())
    ok = record(9, blobs[0] == blobs[1] == blobs[2],
                "CSV bytes identical across two invocations and --jobs 1 vs 3")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
