"""Sweep execution and the fixed CSV schemas.

Every row carries the full parameter tuple. Column order is fixed by the
tuples below; floats are written with ``repr`` so the bytes only depend on
the values.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import analytics as an
from .channel import EqualSnr
from .sim import SIC_RA, MetricsReport, ScenarioConfig, Simulator, run_once

PARAM_COLUMNS = (
    "n_nodes", "tx_prob", "offered_load", "arrival_prob", "deadline_slots", "policy",
    "age_threshold", "sigma_eps_sq", "analytic_csi_v", "channel_mode", "snr_db", "rate_threshold",
    "tx_power_dbm", "noise_power", "pathloss_ref_db", "pathloss_exponent", "area_m",
    "n_slots", "n_runs", "seed", "drop_on_deadline",
)
ANALYZE_COLUMNS = PARAM_COLUMNS + (
    "q_s", "avg_aoi", "throughput", "deadline_violation", "rho", "unstable", "notes",
)
RESULT_COLUMNS = PARAM_COLUMNS + (
    "metric", "analytic", "sim_mean", "sim_stderr", "ci95_half_width", "n_seeds", "z_score", "note",
)
SIM_METRICS = ("q_s", "avg_aoi", "throughput", "deadline_violation", "mean_delay", "drop_rate")
HETERO_SAMPLES = 400


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(value)


def param_values(cfg: ScenarioConfig) -> dict:
    ch = cfg.channel
    eq = isinstance(ch, EqualSnr)
    return {
        "n_nodes": cfg.n_nodes, "tx_prob": cfg.tx_prob, "offered_load": cfg.n_nodes * cfg.tx_prob,
        "arrival_prob": cfg.arrival_prob, "deadline_slots": cfg.deadline_slots,
        "policy": cfg.policy, "age_threshold": cfg.age_threshold,
        "sigma_eps_sq": cfg.sigma_eps_sq, "analytic_csi_v": cfg.analytic_csi_v,
        "channel_mode": "equal_snr" if eq else "geometric",
        "snr_db": ch.snr_db if eq else None, "rate_threshold": ch.rate_threshold,
        "tx_power_dbm": None if eq else ch.tx_power_dbm,
        "noise_power": ch.noise_power,
        "pathloss_ref_db": None if eq else ch.pathloss_ref_db,
        "pathloss_exponent": None if eq else ch.pathloss_exponent,
        "area_m": None if eq else cfg.area_m,
        "n_slots": cfg.n_slots, "n_runs": cfg.n_runs, "seed": cfg.seed,
        "drop_on_deadline": cfg.drop_on_deadline,
    }


def write_csv(columns, rows, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row.get(c)) for c in columns])


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    write_csv(columns, rows, buf)
    return buf.getvalue()


# -- analyze ----------------------------------------------------------------

def analyze_point(cfg: ScenarioConfig) -> dict:
    row = param_values(cfg)
    if not cfg.equal_snr:
        row["notes"] = "closed forms need the equal-SNR channel"
        return row
    rep = an.analytic_report(cfg.budget(), imperfect=cfg.imperfect)
    row.update(q_s=rep.q_s, avg_aoi=rep.avg_aoi, throughput=rep.throughput,
               deadline_violation=rep.deadline_violation, rho=rep.rho, unstable=rep.unstable,
               notes="; ".join(rep.notes))
    return row


# -- simulate / compare -----------------------------------------------------

@dataclass
class ResultRow:
    params: dict
    metric: str
    analytic: float | None
    sim_mean: float
    sim_stderr: float
    ci95_half_width: float
    n_seeds: int
    z_score: float | None
    note: str = ""

    def as_dict(self) -> dict:
        d = dict(self.params)
        d.update(metric=self.metric, analytic=self.analytic, sim_mean=self.sim_mean,
                 sim_stderr=self.sim_stderr, ci95_half_width=self.ci95_half_width,
                 n_seeds=self.n_seeds, z_score=self.z_score, note=self.note)
        return d


def z_score(sim_mean: float, analytic: float, stderr: float) -> float:
    diff = sim_mean - analytic
    if diff == 0.0:
        return 0.0
    if not stderr > 0:
        return math.copysign(math.inf, diff)
    return diff / stderr


def _hetero_q_s(cfg: ScenarioConfig) -> float:
    # average over the placements the simulator actually used
    vals = []
    for k in range(cfg.n_runs):
        sim = Simulator(cfg.replace(n_slots=1), k)
        lams = [1.0 / pr.mean_rx_power for pr in sim.profiles]
        rng = np.random.default_rng([cfg.seed, k, 7])
        vals.append(float(np.mean(an.success_update_prob_general(
            lams, cfg.tx_prob, cfg.channel, HETERO_SAMPLES, rng))))
    return float(np.mean(vals))


def analytic_values(cfg: ScenarioConfig) -> tuple:
    """``(metric -> value or None, metric -> note)`` for one point."""
    values = {m: None for m in SIM_METRICS}
    notes = {m: "" for m in SIM_METRICS}
    if cfg.policy != SIC_RA:
        for m in SIM_METRICS:
            notes[m] = f"no closed form for policy {cfg.policy}"
        return values, notes
    if not cfg.equal_snr:
        if cfg.n_nodes <= an.MAX_ENUMERATION:
            values["q_s"] = _hetero_q_s(cfg)
            notes["q_s"] = "closed form treats every other node as backlogged"
        for m in SIM_METRICS:
            if values[m] is None:
                notes[m] = "no closed form for heterogeneous links"
        return values, notes
    budget = cfg.budget()
    rep = an.analytic_report(budget, imperfect=cfg.imperfect)
    values["q_s"] = rep.q_s
    values["throughput"] = rep.throughput
    values["deadline_violation"] = rep.deadline_violation
    notes["drop_rate"] = "no closed form"
    notes["throughput"] = "closed form treats every node as backlogged"
    if rep.unstable:
        notes["avg_aoi"] = "skipped: q_s <= p_a, analytic AoI diverges"
        notes["mean_delay"] = "skipped: unstable queue"
        notes["deadline_violation"] = "unstable queue, analytic value taken as 1"
    else:
        notes["q_s"] = "closed form treats every other node as backlogged"
        values["avg_aoi"] = rep.avg_aoi
        values["mean_delay"] = 1.0 / an._delay_param(budget, rep.q_s)
    if cfg.drop_on_deadline:
        for m in ("avg_aoi", "deadline_violation", "mean_delay"):
            if values[m] is not None:
                notes[m] = "closed form ignores deadline drops"
    return values, notes


def report_rows(report: MetricsReport, with_analytic: bool) -> list:
    cfg = report.config
    params = param_values(cfg)
    if with_analytic:
        values, notes = analytic_values(cfg)
    else:
        values, notes = {m: None for m in SIM_METRICS}, {m: "" for m in SIM_METRICS}
    rows = []
    for m in SIM_METRICS:
        mean = report.mean(m)
        se = report.stderr(m)
        a = values[m]
        z = z_score(mean, a, se) if a is not None and not math.isnan(mean) else None
        rows.append(ResultRow(params, m, a, mean, se, report.ci_half_width(m), len(report.runs),
                              z, notes[m]))
    return rows


def run_points(points, jobs: int = 1) -> list:
    """Simulate every (point, run) pair; reports come back in sweep order."""
    tasks = [(cfg, k) for cfg in points for k in range(cfg.n_runs)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_once, *zip(*tasks)))
    else:
        results = [run_once(cfg, k) for cfg, k in tasks]
    out = []
    pos = 0
    for cfg in points:
        out.append(MetricsReport(cfg, results[pos: pos + cfg.n_runs]))
        pos += cfg.n_runs
    return out


def max_abs_z(rows) -> tuple:
    """Largest finite-or-infinite |z| and the row it came from."""
    best, where = 0.0, None
    for r in rows:
        if r.z_score is None:
            continue
        if abs(r.z_score) > best or where is None:
            best, where = abs(r.z_score), r
    return best, where


def sweep_rows(points, jobs: int = 1, with_analytic: bool = True) -> list:
    return [r.as_dict() for rep in run_points(points, jobs) for r in report_rows(rep, with_analytic)]
