"""Brute-force Monte-Carlo counterparts of the closed forms.

None of these call into ``analytics``; they only sample and decode.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .sic import decode_batch


@dataclass
class SicSlotStats:
    m: int
    n: int
    rank_pass: np.ndarray  # per-rank SINR test rate, ranks 1..m
    rank_pass_se: np.ndarray
    at_least: np.ndarray  # Pr{decoded >= i}, i = 1..m
    at_least_se: np.ndarray
    outage: float  # 1 - E[decoded] / m, outage of a uniformly tagged transmitter
    outage_se: float
    decoded_dist: np.ndarray  # Pr{decoded == k}, k = 0..m


def equal_snr_slots(m: int, gamma: float, lambda_gamma_sigma2: float, n: int,
                    rng: np.random.Generator) -> SicSlotStats:
    """Decode ``n`` slots with ``m`` unit-mean Rayleigh signals."""
    noise = lambda_gamma_sigma2 / gamma if gamma > 0 else 0.0
    powers = rng.exponential(1.0, size=(n, m))
    counts, passes = decode_batch(powers, noise, gamma)
    rate = passes.mean(axis=0)
    at_least = np.array([(counts >= i).mean() for i in range(1, m + 1)])
    per_slot = 1.0 - counts / m
    return SicSlotStats(
        m=m, n=n,
        rank_pass=rate, rank_pass_se=np.sqrt(rate * (1 - rate) / n),
        at_least=at_least, at_least_se=np.sqrt(at_least * (1 - at_least) / n),
        outage=float(per_slot.mean()), outage_se=float(per_slot.std(ddof=1) / math.sqrt(n)),
        decoded_dist=np.bincount(counts, minlength=m + 1) / n,
    )


def order_frequency(lambdas, n: int, rng: np.random.Generator) -> float:
    """Fraction of draws whose powers come out in the given strongest-first order."""
    lams = np.asarray(lambdas, dtype=float)
    draws = rng.exponential(1.0 / lams, size=(n, len(lams)))
    return float(np.all(np.diff(draws, axis=1) < 0, axis=1).mean())


def saturated_success(n_nodes: int, tx_prob: float, gamma: float, lambda_gamma_sigma2: float,
                      n: int, rng: np.random.Generator):
    """Per-node success probability and mean decoded count per slot when every
    node always has an update, with the outage of each collision size sampled
    rather than taken from the closed form. Returns ``(q_s, throughput)``."""
    q_s = 0.0
    s_th = 0.0
    for m in range(1, n_nodes + 1):
        w = math.comb(n_nodes, m) * tx_prob ** m * (1 - tx_prob) ** (n_nodes - m)
        if w < 1e-12:
            continue
        stats = equal_snr_slots(m, gamma, lambda_gamma_sigma2, n, rng)
        mean_decoded = m * (1.0 - stats.outage)
        s_th += w * mean_decoded
        q_s += w * mean_decoded / n_nodes
    return q_s, s_th


@dataclass
class QueueTrace:
    avg_aoi: float
    delays: np.ndarray
    queue_sizes: np.ndarray


def single_queue(arrival_prob: float, q_s: float, n_slots: int, rng: np.random.Generator,
                 warmup: int = 0) -> QueueTrace:
    """FIFO queue with Bernoulli arrivals at the end of a slot and service that
    succeeds independently with probability ``q_s`` in each backlogged slot."""
    arrivals = rng.random(n_slots) < arrival_prob
    service = rng.random(n_slots) < q_s
    queue = deque()
    age = 0
    age_sum = 0
    delays = []
    sizes = np.zeros(n_slots - warmup, dtype=np.int64)
    for t in range(n_slots):
        delivered = None
        if queue and service[t]:
            delivered = queue.popleft()
        age = t - delivered + 1 if delivered is not None else age + 1
        if arrivals[t]:
            queue.append(t)
        if t >= warmup:
            age_sum += age
            sizes[t - warmup] = len(queue)
            if delivered is not None:
                delays.append(t - delivered)
    return QueueTrace(age_sum / (n_slots - warmup), np.array(delays), sizes)
