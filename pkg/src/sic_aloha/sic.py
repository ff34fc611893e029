"""Dynamic-ordered successive interference cancellation at the AP.

The AP sorts the collided signals by (estimated) received power and decodes
strongest first. Rank ``i`` is decoded iff every earlier rank was decoded and

    I_i / (sigma^2 + sum_{j>i} I_j + sum_{l<=i} phi_l) >= gamma

where ``I`` are true powers and ``phi`` the cancellation residuals left by
imperfect channel estimates (all zero under perfect CSI).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

PERFECT = "perfect"
IMPERFECT = "imperfect"


@dataclass
class SlotReception:
    """Signals that collided in one slot."""

    node_ids: np.ndarray
    true_power: np.ndarray
    estimated_power: np.ndarray
    residual_power: np.ndarray

    @classmethod
    def from_entries(cls, entries) -> "SlotReception":
        """Build from ``(node_id, true, estimated, residual)`` tuples."""
        if len(entries) == 0:
            empty = np.zeros(0)
            return cls(np.zeros(0, dtype=np.int64), empty, empty.copy(), empty.copy())
        ids, true, est, resid = zip(*entries)
        return cls(np.asarray(ids, dtype=np.int64), np.asarray(true, dtype=float),
                   np.asarray(est, dtype=float), np.asarray(resid, dtype=float))

    @classmethod
    def perfect(cls, powers: dict) -> "SlotReception":
        ids = sorted(powers)
        return cls.from_entries([(i, powers[i], powers[i], 0.0) for i in ids])

    @property
    def m(self) -> int:
        return len(self.node_ids)


@dataclass
class DecodeResult:
    order: list
    decoded_count: int
    per_node: dict = field(default_factory=dict)

    @property
    def decoded(self) -> list:
        return self.order[: self.decoded_count]


@numba.njit(cache=True)
def _rank_order(key, node_ids):
    # descending key, ascending node id on ties
    m = key.shape[0]
    idx = np.empty(m, dtype=np.int64)
    for i in range(m):
        idx[i] = i
    for i in range(1, m):
        cur = idx[i]
        j = i - 1
        while j >= 0:
            prev = idx[j]
            if key[prev] > key[cur] or (key[prev] == key[cur] and node_ids[prev] < node_ids[cur]):
                break
            idx[j + 1] = prev
            j -= 1
        idx[j + 1] = cur
    return idx


@numba.njit(cache=True)
def _sinr_chain(true_sorted, resid_sorted, noise_power, gamma, passes):
    """Per-rank SINR test on an already ordered slot.

    ``passes[i]`` is the rate test of rank ``i`` on its own; the return value
    is the decoded prefix length (stops at the first failure).
    """
    m = true_sorted.shape[0]
    tail = 0.0
    for i in range(m):
        tail += true_sorted[i]
    resid = 0.0
    count = 0
    prefix = True
    for i in range(m):
        tail -= true_sorted[i]
        if tail < 0.0:
            tail = 0.0
        resid += resid_sorted[i]
        ok = true_sorted[i] >= gamma * (noise_power + tail + resid)
        passes[i] = ok
        if prefix and ok:
            count += 1
        else:
            prefix = False
    return count


@numba.njit(cache=True)
def _decode(node_ids, true_power, key, residual, noise_power, gamma):
    m = true_power.shape[0]
    order = _rank_order(key, node_ids)
    ts = np.empty(m)
    rs = np.empty(m)
    for i in range(m):
        ts[i] = true_power[order[i]]
        rs[i] = residual[order[i]]
    passes = np.zeros(m, dtype=np.bool_)
    count = _sinr_chain(ts, rs, noise_power, gamma, passes)
    return order, count


def order_slot(reception: SlotReception, csi_mode: str = PERFECT) -> list:
    key = reception.true_power if csi_mode == PERFECT else reception.estimated_power
    idx = _rank_order(np.ascontiguousarray(key, dtype=float), reception.node_ids)
    return [int(reception.node_ids[i]) for i in idx]


def decode_slot(reception: SlotReception, params, csi_mode: str = PERFECT) -> DecodeResult:
    """Run SIC on one slot. ``params`` needs ``gamma`` and ``noise_power``."""
    if reception.m == 0:
        return DecodeResult([], 0, {})
    if csi_mode == PERFECT:
        key = reception.true_power
        resid = np.zeros(reception.m)
    else:
        key = reception.estimated_power
        resid = reception.residual_power
    idx, count = _decode(reception.node_ids, np.asarray(reception.true_power, dtype=float),
                         np.asarray(key, dtype=float), np.asarray(resid, dtype=float),
                         float(params.noise_power), float(params.gamma))
    order = [int(reception.node_ids[i]) for i in idx]
    per_node = {nid: rank < count for rank, nid in enumerate(order)}
    return DecodeResult(order, int(count), per_node)


@numba.njit(cache=True)
def _decode_batch(powers, noise_power, gamma):
    n, m = powers.shape
    counts = np.zeros(n, dtype=np.int64)
    passes = np.zeros((n, m), dtype=np.bool_)
    ids = np.arange(m)
    zeros = np.zeros(m)
    for s in range(n):
        order = _rank_order(powers[s], ids)
        ts = np.empty(m)
        for i in range(m):
            ts[i] = powers[s, order[i]]
        counts[s] = _sinr_chain(ts, zeros, noise_power, gamma, passes[s])
    return counts, passes


def decode_batch(powers: np.ndarray, noise_power: float, gamma: float):
    """Decode many perfect-CSI slots of equal size ``m`` at once.

    Returns ``(decoded_count[n], rank_passes[n, m])`` where ``rank_passes`` is
    the per-rank SINR test in decoding order, ignoring earlier failures.
    """
    powers = np.ascontiguousarray(powers, dtype=float)
    return _decode_batch(powers, float(noise_power), float(gamma))
