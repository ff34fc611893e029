"""Slot-synchronous simulation of N queued nodes contending for one AP.

Slot ``t`` proceeds as: HoL transmit decisions, channel draws for the active
set, AP decoding, delivery of decoded HoLs, optional deadline drops, AoI
update, and finally Bernoulli arrivals stamped ``g = t``. An update generated
in slot ``g`` is first eligible in slot ``g + 1``, its delay on delivery in
slot ``d`` is ``T = d - g >= 1``, and the AoI drops to ``T + 1``.

Randomness is pre-drawn in fixed chunks from one generator per purpose
(placement, arrivals, access, fading, estimation error), each spawned from
``SeedSequence([seed, run_index])``. Runs that differ only in policy or CSI
error therefore share arrivals, access coins and fading.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numba
import numpy as np
from scipy import stats

from .analytics import LinkBudget
from .channel import ChannelParams, EqualSnr, NodeProfile
from .sic import PERFECT, SlotReception, _decode, decode_slot

SIC_RA = "sic_ra"
STANDARD = "standard"
ADRA = "adra"
POLICIES = (SIC_RA, STANDARD, ADRA)
_POLICY_CODE = {SIC_RA: 0, STANDARD: 1, ADRA: 2}

CHUNK = 2048
DELAY_BINS = 4096
QSIZE_BINS = 4096
MIN_DISTANCE_M = 1.0


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class ScenarioConfig:
    n_nodes: int = 5
    tx_prob: float = 0.1
    arrival_prob: float = 0.4
    deadline_slots: int = 5
    policy: str = SIC_RA
    age_threshold: int | None = None  # required for adra
    sigma_eps_sq: float = 0.0  # 0 means perfect CSI
    analytic_csi_v: float | None = None  # overrides the default sigma_eps^2 -> v mapping
    channel: ChannelParams | EqualSnr = field(default_factory=EqualSnr)
    area_m: float = 200.0
    n_slots: int = 100_000
    n_runs: int = 10
    seed: int = 1
    drop_on_deadline: bool = False
    warmup_fraction: float = 0.1

    def validate(self) -> "ScenarioConfig":
        def bad(name, msg):
            raise ConfigError(name, msg)

        if not isinstance(self.n_nodes, (int, np.integer)) or self.n_nodes < 1:
            bad("n_nodes", f"must be an integer >= 1, got {self.n_nodes!r}")
        for name in ("tx_prob", "arrival_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                bad(name, f"must be in [0, 1], got {v!r}")
        if self.deadline_slots < 1:
            bad("deadline_slots", f"must be >= 1, got {self.deadline_slots!r}")
        if self.policy not in POLICIES:
            bad("policy", f"must be one of {', '.join(POLICIES)}, got {self.policy!r}")
        if self.policy == ADRA and self.age_threshold is None:
            bad("age_threshold", "required for the adra policy")
        if self.age_threshold is not None and self.age_threshold < 0:
            bad("age_threshold", f"must be >= 0, got {self.age_threshold!r}")
        if not self.sigma_eps_sq >= 0:
            bad("sigma_eps_sq", f"must be >= 0, got {self.sigma_eps_sq!r}")
        if self.analytic_csi_v is not None and not self.analytic_csi_v > 0:
            bad("analytic_csi_v", f"must be > 0, got {self.analytic_csi_v!r}")
        if isinstance(self.channel, ChannelParams) and not self.area_m > 0:
            bad("area_m", f"must be positive with geometric placement, got {self.area_m!r}")
        if self.n_slots < 1:
            bad("n_slots", f"must be >= 1, got {self.n_slots!r}")
        if self.n_runs < 1:
            bad("n_runs", f"must be >= 1, got {self.n_runs!r}")
        if not 0.0 <= self.warmup_fraction < 1.0:
            bad("warmup_fraction", f"must be in [0, 1), got {self.warmup_fraction!r}")
        return self

    @property
    def equal_snr(self) -> bool:
        return isinstance(self.channel, EqualSnr)

    @property
    def imperfect(self) -> bool:
        return self.sigma_eps_sq > 0

    @property
    def warmup_slots(self) -> int:
        return int(self.n_slots * self.warmup_fraction)

    def replace(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)

    def budget(self) -> LinkBudget:
        """Closed-form parameters; only defined for the equal-SNR channel.

        The residual-power rate is ``v = 1 / (sigma_eps^2 * E[I])`` unless
        ``analytic_csi_v`` is set.
        """
        if not self.equal_snr:
            raise ConfigError("channel", "closed forms need the equal-SNR channel")
        ch = self.channel
        csi_v = 1.0 / self.sigma_eps_sq if self.sigma_eps_sq > 0 else math.inf
        if self.analytic_csi_v is not None:
            csi_v = self.analytic_csi_v
        return LinkBudget(lambda_gamma_sigma2=ch.gamma * ch.noise_power, gamma=ch.gamma,
                          n_nodes=self.n_nodes, tx_prob=self.tx_prob,
                          arrival_prob=self.arrival_prob, deadline_slots=self.deadline_slots,
                          csi_v=csi_v, lam=1.0)


def place_nodes(config: ScenarioConfig, rng: np.random.Generator) -> list:
    if config.equal_snr:
        return [NodeProfile.equal_snr(i) for i in range(config.n_nodes)]
    half = config.area_m / 2.0
    xy = rng.uniform(-half, half, size=(config.n_nodes, 2))
    dist = np.maximum(np.hypot(xy[:, 0], xy[:, 1]), MIN_DISTANCE_M)
    return [NodeProfile.at_distance(i, float(d), config.channel) for i, d in enumerate(dist)]


def policy_decision(policy: str, aoi: int, tx_prob: float, rng, age_threshold: int | None = None) -> bool:
    """Transmit decision of a node with a non-empty queue."""
    if policy == ADRA and not aoi > age_threshold:
        return False
    return bool(rng.random() < tx_prob)


def ap_receive(policy: str, reception: SlotReception, params, csi_mode: str = PERFECT) -> list:
    """Node ids the AP recovers from one slot.

    Without SIC the slot is a collision channel: only a lone transmitter that
    clears the single-user threshold gets through.
    """
    if policy != SIC_RA:
        if reception.m == 1 and reception.true_power[0] >= params.gamma * params.noise_power:
            return [int(reception.node_ids[0])]
        return []
    return decode_slot(reception, params, csi_mode).decoded


# -- kernel -----------------------------------------------------------------

# int counters
G_TOTAL, D_TOTAL, X_TOTAL, GEN, DELIV, DROP, LATE, BACKLOG, TX, SLOTS, DELAY_SUM, LOGGED = range(12)
N_COUNTERS = 12


@numba.njit(cache=True)
def _push(qbuf, qhead, qlen, i, g):
    cap = qbuf.shape[1]
    if qlen[i] == cap:
        n = qbuf.shape[0]
        grown = np.empty((n, 2 * cap), dtype=np.int64)
        for k in range(n):
            for j in range(qlen[k]):
                grown[k, j] = qbuf[k, (qhead[k] + j) % cap]
            qhead[k] = 0
        qbuf = grown
        cap = 2 * cap
    qbuf[i, (qhead[i] + qlen[i]) % cap] = g
    qlen[i] += 1
    return qbuf


@numba.njit(cache=True)
def _advance(t0, t1, chunk_t0, warm, fparams, iparams, mean_rx,
             arr_u, tx_u, ch, eps,
             qbuf, qhead, qlen, aoi,
             counts, aoi_sum, delay_hist, qsize_hist, dec_hist, tx_hist,
             trace, trace_ntx, trace_ndec, trace_aoi, delay_log,
             last_active, last_true, last_est, last_resid, last_order, last_meta):
    p, pa, gamma, noise, sd_eps = fparams[0], fparams[1], fparams[2], fparams[3], fparams[4]
    policy, threshold, deadline, drop, imperfect = iparams[0], iparams[1], iparams[2], iparams[3], iparams[4]
    n = qlen.shape[0]
    active = np.empty(n, dtype=np.int64)
    true = np.empty(n)
    est = np.empty(n)
    resid = np.empty(n)
    delivered = np.zeros(n, dtype=np.bool_)
    new_aoi = np.zeros(n, dtype=np.int64)
    n_delay_bins = delay_hist.shape[0]
    n_q_bins = qsize_hist.shape[0]
    for t in range(t0, t1):
        k = t - chunk_t0
        post = t >= warm
        m = 0
        for i in range(n):
            delivered[i] = False
            if qlen[i] > 0:
                if post:
                    counts[7] += 1
                if policy == 2 and aoi[i] <= threshold:
                    continue
                if tx_u[k, i] < p:
                    active[m] = i
                    m += 1
        for a in range(m):
            i = active[a]
            cr = ch[k, i, 0]
            ci = ch[k, i, 1]
            true[a] = 0.5 * (cr * cr + ci * ci) * mean_rx[i]
            if imperfect == 1:
                er = eps[k, i, 0] * sd_eps
                ei = eps[k, i, 1] * sd_eps
                est[a] = 0.5 * ((cr - er) * (cr - er) + (ci - ei) * (ci - ei)) * mean_rx[i]
                resid[a] = 0.5 * (er * er + ei * ei) * mean_rx[i]
            else:
                est[a] = true[a]
                resid[a] = 0.0
        count = 0
        if m > 0:
            if policy == 0:
                order, count = _decode(active[:m], true[:m], est[:m], resid[:m], noise, gamma)
            else:
                order = np.zeros(1, dtype=np.int64)
                if m == 1 and true[0] >= gamma * noise:
                    count = 1
        else:
            order = np.zeros(0, dtype=np.int64)
        for r in range(count):
            i = active[order[r]]
            cap = qbuf.shape[1]
            g = qbuf[i, qhead[i]]
            qhead[i] = (qhead[i] + 1) % cap
            qlen[i] -= 1
            delay = t - g
            delivered[i] = True
            new_aoi[i] = delay + 1
            counts[1] += 1
            if post:
                counts[4] += 1
                counts[10] += delay
                delay_hist[min(delay, n_delay_bins - 1)] += 1
                if counts[11] < delay_log.shape[0]:
                    delay_log[counts[11]] = delay
                    counts[11] += 1
                if delay > deadline:
                    counts[6] += 1
        if drop == 1:
            for i in range(n):
                cap = qbuf.shape[1]
                while qlen[i] > 0 and t - qbuf[i, qhead[i]] >= deadline:
                    qhead[i] = (qhead[i] + 1) % cap
                    qlen[i] -= 1
                    counts[2] += 1
                    if post:
                        counts[5] += 1
        for i in range(n):
            if delivered[i]:
                aoi[i] = new_aoi[i]
            else:
                aoi[i] += 1
            if post:
                aoi_sum[0] += aoi[i]
            if arr_u[k, i] < pa:
                qbuf = _push(qbuf, qhead, qlen, i, t)
                counts[0] += 1
                if post:
                    counts[3] += 1
            if post:
                qsize_hist[min(qlen[i], n_q_bins - 1)] += 1
        if post:
            counts[8] += m
            counts[9] += 1
            dec_hist[count] += 1
            tx_hist[m] += 1
        if trace:
            trace_ntx[t] = m
            trace_ndec[t] = count
            for i in range(n):
                trace_aoi[t, i] = aoi[i]
        last_meta[0] = t
        last_meta[1] = m
        last_meta[2] = count
        for a in range(m):
            last_active[a] = active[a]
            last_true[a] = true[a]
            last_est[a] = est[a]
            last_resid[a] = resid[a]
            last_order[a] = active[order[a]] if policy == 0 else active[a]
    return qbuf


# -- Python surface -----------------------------------------------------------

@dataclass
class SlotOutcome:
    slot: int
    transmitters: list
    true_power: list
    estimated_power: list
    residual_power: list
    order: list
    decoded_count: int

    @property
    def decoded(self) -> list:
        return self.order[: self.decoded_count]


@dataclass
class RunResult:
    run_index: int
    avg_aoi: float
    throughput: float
    deadline_violation: float
    drop_rate: float
    q_s: float
    mean_delay: float
    tx_success: float
    generated_total: int
    delivered_total: int
    dropped_total: int
    queued_total: int
    delay_hist: np.ndarray = field(repr=False)
    qsize_hist: np.ndarray = field(repr=False)
    decoded_hist: np.ndarray = field(repr=False)
    tx_hist: np.ndarray = field(repr=False)


METRICS = ("q_s", "avg_aoi", "throughput", "deadline_violation", "drop_rate", "mean_delay")


class Simulator:
    """One run of a scenario; ``step`` and ``advance`` share the same streams."""

    def __init__(self, config: ScenarioConfig, run_index: int = 0, trace: bool = False,
                 delay_log: int = 0):
        self.config = config.validate()
        self.run_index = run_index
        n = config.n_nodes
        ss = np.random.SeedSequence([config.seed, run_index])
        place, arr, acc, fad, err = (np.random.default_rng(s) for s in ss.spawn(5))
        self._rngs = (arr, acc, fad, err)
        self.profiles = place_nodes(config, place)
        self.mean_rx = np.array([pr.mean_rx_power for pr in self.profiles])
        ch = config.channel
        self.fparams = np.array([config.tx_prob, config.arrival_prob, ch.gamma, ch.noise_power,
                                 math.sqrt(config.sigma_eps_sq)])
        thr = -1 if config.age_threshold is None else int(config.age_threshold)
        self.iparams = np.array([_POLICY_CODE[config.policy], thr, config.deadline_slots,
                                 int(config.drop_on_deadline), int(config.imperfect)], dtype=np.int64)
        self.warm = config.warmup_slots
        self.qbuf = np.zeros((n, 64), dtype=np.int64)
        self.qhead = np.zeros(n, dtype=np.int64)
        self.qlen = np.zeros(n, dtype=np.int64)
        self.aoi = np.zeros(n, dtype=np.int64)
        self.counts = np.zeros(N_COUNTERS, dtype=np.int64)
        self.aoi_sum = np.zeros(1)
        self.delay_hist = np.zeros(DELAY_BINS, dtype=np.int64)
        self.qsize_hist = np.zeros(QSIZE_BINS, dtype=np.int64)
        self.dec_hist = np.zeros(n + 1, dtype=np.int64)
        self.tx_hist = np.zeros(n + 1, dtype=np.int64)
        self.trace = trace
        tn = config.n_slots if trace else 0
        self.trace_ntx = np.zeros(tn, dtype=np.int64)
        self.trace_ndec = np.zeros(tn, dtype=np.int64)
        self.trace_aoi = np.zeros((tn, n if trace else 0), dtype=np.int64)
        # delays of post-warm-up deliveries in delivery order, up to this many
        self.delay_log = np.zeros(delay_log, dtype=np.int64)
        self._last = (np.zeros(n, dtype=np.int64), np.zeros(n), np.zeros(n), np.zeros(n),
                      np.zeros(n, dtype=np.int64), np.zeros(3, dtype=np.int64))
        self.t = 0
        self._chunk_t0 = 0
        self._chunk = None

    def _draw_chunk(self):
        n = self.config.n_nodes
        arr, acc, fad, err = self._rngs
        arr_u = arr.random((CHUNK, n))
        tx_u = acc.random((CHUNK, n))
        ch = fad.standard_normal((CHUNK, n, 2))
        eps = err.standard_normal((CHUNK, n, 2)) if self.config.imperfect else np.zeros((1, 1, 2))
        self._chunk = (arr_u, tx_u, ch, eps)
        self._chunk_t0 = self.t

    def advance(self, n_slots: int):
        end = self.t + n_slots
        if self.trace and end > self.config.n_slots:
            raise ValueError("trace buffer only covers config.n_slots")
        while self.t < end:
            if self._chunk is None or self.t >= self._chunk_t0 + CHUNK:
                self._draw_chunk()
            stop = min(end, self._chunk_t0 + CHUNK)
            self.qbuf = _advance(self.t, stop, self._chunk_t0, self.warm, self.fparams, self.iparams,
                                 self.mean_rx, *self._chunk, self.qbuf, self.qhead, self.qlen, self.aoi,
                                 self.counts, self.aoi_sum, self.delay_hist, self.qsize_hist,
                                 self.dec_hist, self.tx_hist, self.trace, self.trace_ntx,
                                 self.trace_ndec, self.trace_aoi, self.delay_log, *self._last)
            self.t = stop

    def step(self) -> SlotOutcome:
        self.advance(1)
        active, true, est, resid, order, meta = self._last
        m = int(meta[1])
        return SlotOutcome(slot=int(meta[0]), transmitters=active[:m].tolist(),
                           true_power=true[:m].tolist(), estimated_power=est[:m].tolist(),
                           residual_power=resid[:m].tolist(), order=order[:m].tolist(),
                           decoded_count=int(meta[2]))

    def logged_delays(self) -> np.ndarray:
        return self.delay_log[: self.counts[LOGGED]].copy()

    def queue(self, node: int) -> list:
        cap = self.qbuf.shape[1]
        h = self.qhead[node]
        return [int(self.qbuf[node, (h + j) % cap]) for j in range(self.qlen[node])]

    def result(self) -> RunResult:
        c = self.counts
        slots = max(int(c[SLOTS]), 1)
        n = self.config.n_nodes
        resolved = c[DELIV] + c[DROP]
        return RunResult(
            run_index=self.run_index,
            avg_aoi=float(self.aoi_sum[0]) / (slots * n),
            throughput=c[DELIV] / slots,
            deadline_violation=(c[LATE] + c[DROP]) / resolved if resolved else math.nan,
            drop_rate=c[DROP] / c[GEN] if c[GEN] else 0.0,
            q_s=c[DELIV] / c[BACKLOG] if c[BACKLOG] else math.nan,
            mean_delay=c[DELAY_SUM] / c[DELIV] if c[DELIV] else math.nan,
            tx_success=c[DELIV] / c[TX] if c[TX] else math.nan,
            generated_total=int(c[G_TOTAL]), delivered_total=int(c[D_TOTAL]),
            dropped_total=int(c[X_TOTAL]), queued_total=int(self.qlen.sum()),
            delay_hist=self.delay_hist.copy(), qsize_hist=self.qsize_hist.copy(),
            decoded_hist=self.dec_hist.copy(), tx_hist=self.tx_hist.copy())


def run_once(config: ScenarioConfig, run_index: int = 0) -> RunResult:
    sim = Simulator(config, run_index)
    sim.advance(config.n_slots)
    return sim.result()


@dataclass
class MetricsReport:
    config: ScenarioConfig
    runs: list

    def per_seed(self, metric: str) -> np.ndarray:
        return np.array([getattr(r, metric) for r in self.runs], dtype=float)

    def mean(self, metric: str) -> float:
        return float(np.mean(self.per_seed(metric)))

    def stderr(self, metric: str) -> float:
        vals = self.per_seed(metric)
        return float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else math.nan

    def ci_half_width(self, metric: str, level: float = 0.95) -> float:
        k = len(self.runs)
        if k < 2:
            return math.nan
        return float(stats.t.ppf(0.5 + level / 2, k - 1) * self.stderr(metric))

    def __getattr__(self, name):
        if name in METRICS:
            return self.mean(name)
        raise AttributeError(name)

    def pooled(self, hist: str) -> np.ndarray:
        return np.sum([getattr(r, hist) for r in self.runs], axis=0)


def run(config: ScenarioConfig, jobs: int = 1) -> MetricsReport:
    config.validate()
    indices = range(config.n_runs)
    if jobs > 1 and config.n_runs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(run_once, [config] * config.n_runs, indices))
    else:
        runs = [run_once(config, i) for i in indices]
    return MetricsReport(config, runs)


def config_fields() -> list:
    return [f.name for f in fields(ScenarioConfig)]
