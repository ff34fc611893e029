"""Large-scale path loss and block Rayleigh fading.

Received power of a node is ``I = P |h|^2`` with ``h = c / sqrt(L_d)`` and
``c ~ CN(0, 1)``, so ``I`` is exponential with rate ``lambda = L_d / P``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ChannelDomainError(ValueError):
    pass


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ChannelParams:
    """Link-level constants shared by every node.

    ``gamma`` is derived from ``rate_threshold`` on access and is never stored.
    """

    tx_power_dbm: float = 20.0
    noise_power: float = 1e-13  # watts, about -100 dBm
    rate_threshold: float = 1.0  # bits/s/Hz
    pathloss_ref_db: float = 40.0  # free-space loss at 1 m, 2.4 GHz
    pathloss_exponent: float = 2.0

    def __post_init__(self):
        if not self.noise_power > 0:
            raise ChannelDomainError(f"noise_power must be > 0, got {self.noise_power}")
        if not math.isfinite(self.tx_power_dbm):
            raise ChannelDomainError("tx_power_dbm must be finite")
        if self.rate_threshold < 0:
            raise ChannelDomainError("rate_threshold must be >= 0")
        if not self.pathloss_exponent > 0:
            raise ChannelDomainError(f"pathloss_exponent must be > 0, got {self.pathloss_exponent}")

    @property
    def gamma(self) -> float:
        return 2.0 ** self.rate_threshold - 1.0

    @property
    def tx_power(self) -> float:
        return dbm_to_watts(self.tx_power_dbm)


@dataclass(frozen=True)
class EqualSnr:
    """Geometry-free channel where every node sees the same mean SNR.

    Mean received power is normalised to 1 W, so ``lambda = 1`` and the noise
    power is ``10^(-snr_db/10)``; hence ``lambda*gamma*sigma^2 = gamma/SNR``.
    """

    snr_db: float = 20.0
    rate_threshold: float = 1.0

    @property
    def gamma(self) -> float:
        return 2.0 ** self.rate_threshold - 1.0

    @property
    def noise_power(self) -> float:
        return 10.0 ** (-self.snr_db / 10.0)

    @property
    def snr(self) -> float:
        return db_to_linear(self.snr_db)


@dataclass(frozen=True)
class NodeProfile:
    node_id: int
    distance_m: float
    lam: float  # 1 / mean_rx_power
    mean_rx_power: float

    @classmethod
    def at_distance(cls, node_id: int, distance_m: float, params: ChannelParams) -> "NodeProfile":
        lam = lambda_for(distance_m, params)
        return cls(node_id, float(distance_m), lam, 1.0 / lam)

    @classmethod
    def equal_snr(cls, node_id: int) -> "NodeProfile":
        return cls(node_id, float("nan"), 1.0, 1.0)


def path_loss(distance_m: float, params: ChannelParams) -> float:
    """Linear loss factor ``10^(ref/10) * d^exponent``."""
    if not distance_m > 0:
        raise ChannelDomainError(f"distance must be positive, got {distance_m}")
    return 10.0 ** (params.pathloss_ref_db / 10.0) * distance_m ** params.pathloss_exponent


def lambda_for(distance_m: float, params: ChannelParams) -> float:
    return path_loss(distance_m, params) / params.tx_power


def sample_power(lam, rng: np.random.Generator, size=None):
    """Draw ``|c|^2 / lam`` with ``c ~ CN(0, 1)``, i.e. Exp(lam).

    The draw goes through the complex Gaussian so that ``sample_csi_pair``
    with zero error variance reproduces it bit for bit.
    """
    shape = (2,) if size is None else (2,) + tuple(np.atleast_1d(size))
    re, im = rng.standard_normal(shape)
    out = 0.5 * (re * re + im * im) / lam
    return float(out) if size is None else out


def sample_csi_pair(lam, sigma_eps_sq: float, mean_rx_power, rng: np.random.Generator, size=None):
    """Return ``(true, estimated, residual)`` received powers.

    True channel ``c ~ CN(0,1)``, error ``eps ~ CN(0, sigma_eps_sq)``; the AP
    holds ``c - eps``. The residual left after cancelling with the estimate is
    ``mean_rx_power * |eps|^2``. With zero error variance no error draw is
    made, so the true power equals ``sample_power`` on the same generator.
    """
    if sigma_eps_sq < 0:
        raise ChannelDomainError(f"sigma_eps_sq must be >= 0, got {sigma_eps_sq}")
    shape = (2,) if size is None else (2,) + tuple(np.atleast_1d(size))
    c_re, c_im = rng.standard_normal(shape)
    true = 0.5 * (c_re * c_re + c_im * c_im) / lam
    if sigma_eps_sq == 0:
        if size is None:
            return float(true), float(true), 0.0
        return true, true.copy(), np.zeros_like(true)
    e_re, e_im = rng.standard_normal(shape) * math.sqrt(sigma_eps_sq)
    h_re, h_im = c_re - e_re, c_im - e_im
    est = 0.5 * (h_re * h_re + h_im * h_im) * mean_rx_power
    resid = 0.5 * (e_re * e_re + e_im * e_im) * mean_rx_power
    if size is None:
        return float(true), float(est), float(resid)
    return true, est, resid


def single_outage(lam: float, params) -> float:
    """``Pr{I < gamma sigma^2} = 1 - exp(-lam gamma sigma^2)``.

    ``params`` is anything with ``gamma`` and ``noise_power``.
    """
    if not lam > 0:
        raise ChannelDomainError(f"lambda must be positive, got {lam}")
    return -math.expm1(-lam * params.gamma * params.noise_power)
