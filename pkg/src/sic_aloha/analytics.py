"""Closed-form performance of SIC-assisted slotted ALOHA with FIFO queues.

Equal-SNR expressions depend on the link only through ``x = lambda*gamma*sigma^2``
and ``gamma``. Every queue-dependent metric raises ``UnstableQueueError`` when
``q_s <= p_a`` instead of returning NaN.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .sic import decode_batch


class UnstableQueueError(ValueError):
    """The per-node queue has load ``rho >= 1``; steady-state metrics diverge."""


class UnsupportedSizeError(ValueError):
    pass


MAX_ENUMERATION = 8


@dataclass(frozen=True)
class LinkBudget:
    lambda_gamma_sigma2: float
    gamma: float
    n_nodes: int
    tx_prob: float
    arrival_prob: float = 0.4
    deadline_slots: int = 5
    csi_v: float = math.inf  # rate of the exponential cancellation residual
    lam: float = 1.0  # node power rate; only enters through lam / csi_v

    def __post_init__(self):
        if not 0.0 <= self.tx_prob <= 1.0:
            raise ValueError(f"tx_prob must be in [0, 1], got {self.tx_prob}")
        if not 0.0 <= self.arrival_prob <= 1.0:
            raise ValueError(f"arrival_prob must be in [0, 1], got {self.arrival_prob}")
        if self.n_nodes < 1:
            raise ValueError(f"n_nodes must be >= 1, got {self.n_nodes}")
        if self.deadline_slots < 1:
            raise ValueError(f"deadline_slots must be >= 1, got {self.deadline_slots}")
        if self.lambda_gamma_sigma2 < 0:
            raise ValueError("lambda_gamma_sigma2 must be >= 0")
        if not self.csi_v > 0:
            raise ValueError(f"csi_v must be > 0 or inf, got {self.csi_v}")

    @property
    def offered_load(self) -> float:
        return self.n_nodes * self.tx_prob

    def replace(self, **changes) -> "LinkBudget":
        from dataclasses import replace
        return replace(self, **changes)


@dataclass
class AnalyticReport:
    q_s: float
    avg_aoi: float
    throughput: float
    deadline_violation: float
    rho: float
    unstable: bool = False
    notes: list = field(default_factory=list)


# -- decoding order ---------------------------------------------------------

def order_probability(ordered_lambdas) -> float:
    """Probability that exponentials with these rates arrive in this
    strongest-first order."""
    lams = [float(v) for v in ordered_lambdas]
    if any(v <= 0 for v in lams):
        raise ValueError("rates must be positive")
    prob = 1.0
    running = lams[0] if lams else 0.0
    for lam in lams[1:]:
        running += lam
        prob *= lam / running
    return prob


# -- equal SNR --------------------------------------------------------------

def _exponent(j: int, budget: LinkBudget, imperfect: bool) -> float:
    expo = j * budget.lambda_gamma_sigma2
    if imperfect and math.isfinite(budget.csi_v):
        expo += j * j * budget.gamma * budget.lam / budget.csi_v
    return expo


def rank_success_equal(i: int, m: int, budget: LinkBudget, imperfect: bool = False) -> float:
    """``C(m,i) exp(-i x) / (gamma i + 1)^(m-i)``: rank ``i`` clears its SINR
    test among ``m`` equal-SNR signals.

    Exact for ``gamma >= 1``; for ``gamma < 1`` the expression over-counts and
    can exceed one.
    """
    if not 1 <= i <= m:
        raise ValueError(f"need 1 <= i <= m, got i={i}, m={m}")
    return math.comb(m, i) * math.exp(-_exponent(i, budget, imperfect)) / (budget.gamma * i + 1.0) ** (m - i)


def _outage(m: int, budget: LinkBudget, imperfect: bool) -> float:
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    total = 0.0
    prod = 1.0
    for i in range(1, m + 1):
        prod *= rank_success_equal(i, m, budget, imperfect)
        total += prod
    return min(1.0, max(0.0, 1.0 - total / m))


def outage_equal(m: int, budget: LinkBudget) -> float:
    """Outage of a node colliding with ``m - 1`` others, averaged over its rank."""
    return _outage(m, budget, imperfect=False)


def outage_equal_imperfect(m: int, budget: LinkBudget) -> float:
    """As ``outage_equal`` with the residual interference term ``j/v`` added."""
    return _outage(m, budget, imperfect=True)


def success_update_prob(budget: LinkBudget, imperfect: bool = False) -> float:
    n, p = budget.n_nodes, budget.tx_prob
    q = 0.0
    for m in range(1, n + 1):
        weight = math.comb(n - 1, m - 1) * p ** m * (1.0 - p) ** (n - m)
        if weight == 0.0:
            continue
        q += weight * (1.0 - _outage(m, budget, imperfect))
    return min(1.0, max(0.0, q))


# -- heterogeneous links ----------------------------------------------------

def _conditional_powers(ordered_lams, n, rng):
    """Received powers drawn conditionally on the strongest-first order.

    Given the order, the gap between consecutive order statistics (weakest
    upwards) is exponential with rate equal to the sum of the rates of the
    signals still above it.
    """
    m = len(ordered_lams)
    csum = np.cumsum(ordered_lams)
    out = np.empty((n, m))
    level = np.zeros(n)
    for k in range(m - 1, -1, -1):
        level = level + rng.exponential(1.0 / csum[k], size=n)
        out[:, k] = level
    return out


def _rank_success_given_order(ordered_lams, params, n, rng):
    # columns are already strongest first, so the decoder keeps them in place
    powers = _conditional_powers(ordered_lams, n, rng)
    _, passes = decode_batch(powers, params.noise_power, params.gamma)
    return passes.mean(axis=0)


def avg_outage_general(tagged_index: int, active_lambdas, params, n_samples: int = 4000,
                       rng: np.random.Generator | None = None, n_batches: int = 10):
    """Order-averaged outage of one node among heterogeneous transmitters.

    Enumerates every strongest-first order, weights it by
    ``order_probability`` and uses the product of per-rank success
    probabilities up to the tagged node's rank. The per-rank terms have no
    closed form for unequal rates and are estimated by sampling the powers
    conditionally on each order. Returns ``(estimate, standard_error)``.
    """
    lams = [float(v) for v in active_lambdas]
    m = len(lams)
    if not 0 <= tagged_index < m:
        raise ValueError("tagged_index out of range")
    if m > MAX_ENUMERATION:
        raise UnsupportedSizeError(
            f"{m} active nodes exceeds the enumeration bound {MAX_ENUMERATION}; simulate instead")
    if m == 1:
        return -math.expm1(-lams[0] * params.gamma * params.noise_power), 0.0
    rng = rng if rng is not None else np.random.default_rng()
    per_batch = max(1, n_samples // n_batches)
    estimates = np.zeros(n_batches)
    for perm in itertools.permutations(range(m)):
        ordered = [lams[k] for k in perm]
        weight = order_probability(ordered)
        rank = perm.index(tagged_index)
        for b in range(n_batches):
            succ = _rank_success_given_order(ordered, params, per_batch, rng)
            estimates[b] += weight * (1.0 - np.prod(succ[: rank + 1]))
    se = estimates.std(ddof=1) / math.sqrt(n_batches) if n_batches > 1 else 0.0
    return float(estimates.mean()), float(se)


def success_update_prob_general(lambdas, tx_prob: float, params, n_samples: int = 2000,
                                rng: np.random.Generator | None = None) -> np.ndarray:
    """Per-node ``q_s`` for heterogeneous links, summing over companion sets."""
    lams = [float(v) for v in lambdas]
    n = len(lams)
    if n > MAX_ENUMERATION:
        raise UnsupportedSizeError(f"{n} nodes exceeds the enumeration bound {MAX_ENUMERATION}")
    rng = rng if rng is not None else np.random.default_rng()
    p = tx_prob
    out = np.zeros(n)
    for i in range(n):
        others = [k for k in range(n) if k != i]
        for size in range(0, n):
            weight = p ** (size + 1) * (1.0 - p) ** (n - 1 - size)
            if weight == 0.0:
                continue
            for comp in itertools.combinations(others, size):
                active = [lams[i]] + [lams[k] for k in comp]
                gam, _ = avg_outage_general(0, active, params, n_samples, rng)
                out[i] += weight * (1.0 - gam)
    return out


# -- AoI --------------------------------------------------------------------

def avg_aoi(budget: LinkBudget, q_s: float) -> float:
    """Average AoI in slots for Bernoulli(p_a) arrivals served with prob ``q_s``."""
    pa = budget.arrival_prob
    if not 0.0 < pa < 1.0:
        raise ValueError(f"arrival_prob must be in (0, 1), got {pa}")
    if q_s <= pa:
        raise UnstableQueueError(f"q_s={q_s:.6g} <= p_a={pa:.6g}: average AoI diverges")
    return 1.0 / pa + (1.0 - pa) / (q_s - pa) + pa / q_s - pa / q_s ** 2


# -- throughput -------------------------------------------------------------

def decoded_count_distribution(budget: LinkBudget, imperfect: bool = False) -> np.ndarray:
    """``P[i]`` for ``i = 0..N``: probability that exactly ``i`` signals are
    decoded in a slot. ``P[0]`` is whatever mass is left."""
    n, p = budget.n_nodes, budget.tx_prob
    binom = [math.comb(n, m) * p ** m * (1.0 - p) ** (n - m) for m in range(n + 1)]

    def x(j, m):
        expo = _exponent(j, budget, imperfect)
        return math.comb(m, j) * math.exp(-expo) / (budget.gamma * j + 1.0) ** (m - j)

    at_least = np.zeros(n + 2)
    prod = 1.0
    for i in range(1, n + 1):
        prod *= sum(binom[m] * x(i, m) for m in range(i, n + 1))
        at_least[i] = prod
    exact = np.zeros(n + 1)
    for i in range(1, n):
        exact[i] = at_least[i] - at_least[i + 1]
    exact[n] = at_least[n]
    exact[0] = 1.0 - exact[1:].sum()
    return exact


def throughput(budget: LinkBudget, imperfect: bool = False) -> float:
    dist = decoded_count_distribution(budget, imperfect)
    return float(np.dot(np.arange(len(dist)), dist))


# -- queue and delay --------------------------------------------------------

def queue_load(budget: LinkBudget, q_s: float) -> float:
    pa = budget.arrival_prob
    r = pa * (1.0 - q_s)
    s = q_s * (1.0 - pa)
    if s <= 0.0:
        if r == 0.0 and pa == 0.0:
            return 0.0
        raise UnstableQueueError(f"q_s={q_s:.6g}, p_a={pa:.6g}: no net service")
    rho = r / s
    if rho >= 1.0:
        raise UnstableQueueError(f"rho={rho:.6g} >= 1 (q_s={q_s:.6g}, p_a={pa:.6g})")
    return rho


def queue_distribution(budget: LinkBudget, q_s: float, tail_mass: float = 1e-12) -> np.ndarray:
    """Steady-state queue-size probabilities ``Q_0, Q_1, ...`` observed at the
    end of a slot, truncated once the remaining tail is below ``tail_mass``."""
    pa = budget.arrival_prob
    rho = queue_load(budget, q_s)
    if pa == 0.0:
        return np.array([1.0])
    q1 = pa * (1.0 - rho) / q_s
    q0 = q_s * (1.0 - pa) * q1 / pa
    if rho == 0.0:
        return np.array([q0, q1])
    # tail beyond J is q1 * rho^J / (1 - rho)
    j_max = max(1, int(math.ceil(math.log(tail_mass * (1.0 - rho) / q1) / math.log(rho))))
    return np.concatenate([[q0], q1 * rho ** np.arange(j_max)])


def _delay_param(budget: LinkBudget, q_s: float) -> float:
    return q_s * (1.0 - queue_load(budget, q_s))


def delay_pdf(budget: LinkBudget, q_s: float, t) -> float:
    """Probability that an update spends exactly ``t >= 1`` slots in the system."""
    mu = _delay_param(budget, q_s)
    t = np.asarray(t)
    if np.any(t < 1):
        raise ValueError("delay support starts at t = 1")
    out = mu * (1.0 - mu) ** (t - 1)
    return float(out) if out.ndim == 0 else out


def deadline_violation(budget: LinkBudget, q_s: float) -> float:
    mu = _delay_param(budget, q_s)
    return (1.0 - mu) ** budget.deadline_slots


# -- composition ------------------------------------------------------------

def analytic_report(budget: LinkBudget, imperfect: bool = False) -> AnalyticReport:
    q_s = success_update_prob(budget, imperfect)
    s_th = throughput(budget, imperfect)
    notes = []
    unstable = False
    try:
        rho = queue_load(budget, q_s)
    except UnstableQueueError as exc:
        unstable = True
        notes.append(f"queue: {exc}")
        pa = budget.arrival_prob
        rho = math.inf if q_s * (1 - pa) == 0 else pa * (1 - q_s) / (q_s * (1 - pa))
    try:
        aoi = avg_aoi(budget, q_s)
    except UnstableQueueError as exc:
        aoi = math.inf
        notes.append(f"avg_aoi: {exc}")
    except ValueError as exc:
        aoi = math.nan
        notes.append(f"avg_aoi: {exc}")
    if unstable:
        p_d = 1.0
        notes.append("deadline_violation: unstable queue, reported as 1")
    else:
        p_d = deadline_violation(budget, q_s)
    return AnalyticReport(q_s=q_s, avg_aoi=aoi, throughput=s_th, deadline_violation=p_d,
                          rho=rho, unstable=unstable, notes=notes)
