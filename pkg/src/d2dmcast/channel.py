"""Physical-layer math: log-distance path gain with shadowing, link rate,
required transmit power and multicast group power.

All power quantities are linear Watts; dB only appears at the edges.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np


class InvalidInputError(ValueError):
    """Raised when an argument violates an operation's precondition."""


def _scalar_or_array(a: np.ndarray):
    return float(a) if a.ndim == 0 else a


def db_to_linear(x_db):
    return _scalar_or_array(10.0 ** (np.asarray(x_db, dtype=float) / 10.0))


def linear_to_db(x):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise InvalidInputError(f"linear_to_db needs a positive ratio, got {x!r}")
    return _scalar_or_array(10.0 * np.log10(arr))


def dbm_to_watts(x_dbm: float) -> float:
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def watts_to_dbm(x_w: float) -> float:
    if x_w <= 0:
        return float("-inf")
    return 10.0 * math.log10(x_w) + 30.0


@dataclass(frozen=True)
class ChannelParams:
    """Constants of the log-distance model plus receiver noise power.

    ``k_db`` is the attenuation constant already expressed in dB, so it is
    used additively rather than passed through another ``10*log10``.
    """

    k_db: float = -31.54
    beta: float = 3.0
    d0_m: float = 1.0
    sigma_shadow_db: float = 8.0
    n0_w: float = 1e-13

    def __post_init__(self):
        if not self.beta > 0:
            raise InvalidInputError(f"beta must be > 0, got {self.beta}")
        if not self.d0_m > 0:
            raise InvalidInputError(f"d0_m must be > 0, got {self.d0_m}")
        if not self.sigma_shadow_db >= 0:
            raise InvalidInputError(f"sigma_shadow_db must be >= 0, got {self.sigma_shadow_db}")
        if not self.n0_w > 0:
            raise InvalidInputError(f"n0_w must be > 0, got {self.n0_w}")

    def to_dict(self) -> dict:
        return asdict(self)


def path_gain_db(distance_m, params: ChannelParams, shadow_db=0.0):
    """Path gain in dB at ``distance_m``; distances under ``d0_m`` are clamped.

    Accepts scalars or numpy arrays (broadcast against ``shadow_db``).
    """
    d = np.asarray(distance_m, dtype=float)
    if np.any(d <= 0) or np.any(np.isnan(d)):
        raise InvalidInputError("distance must be positive")
    ratio = np.maximum(d, params.d0_m) / params.d0_m
    out = params.k_db - 10.0 * params.beta * np.log10(ratio) - np.asarray(shadow_db, dtype=float)
    return _scalar_or_array(out)


def link_rate(gain: float, tx_power_w: float, params: ChannelParams) -> float:
    """Achievable spectral efficiency (bit/s/Hz) of a single link."""
    if tx_power_w < 0:
        raise InvalidInputError(f"tx power must be >= 0, got {tx_power_w}")
    if not gain > 0:
        raise InvalidInputError(f"gain must be > 0, got {gain}")
    return math.log2(1.0 + gain * tx_power_w / params.n0_w)


def required_power(gain, r_min: float, params: ChannelParams):
    """Smallest transmit power (W) that makes a link of ``gain`` hit ``r_min``."""
    if not r_min > 0:
        raise InvalidInputError(f"r_min must be > 0, got {r_min}")
    g = np.asarray(gain, dtype=float)
    if np.any(g <= 0):
        raise InvalidInputError("gain must be > 0")
    return _scalar_or_array((2.0 ** r_min - 1.0) * params.n0_w / g)


def worst_receiver(transmitter: int, receivers: Iterable[int], gains: np.ndarray) -> int:
    """Receiver with the smallest gain from ``transmitter``; ties go to the smaller id."""
    worst = None
    worst_gain = math.inf
    for r in sorted(receivers):
        g = gains[transmitter, r]
        if g < worst_gain:
            worst, worst_gain = r, g
    if worst is None:
        raise InvalidInputError("multicast group needs at least one receiver")
    return worst


def group_power(
    transmitter: int,
    receivers: Sequence[int] | set[int],
    gains: np.ndarray,
    r_min: float,
    params: ChannelParams,
) -> tuple[float, int]:
    """Power needed to multicast at ``r_min`` to every receiver.

    The group rate is limited by its weakest link, so the power is the
    required power of the worst receiver. Returns ``(power_w, worst_id)``.
    """
    if len(receivers) == 0:
        raise InvalidInputError("multicast group needs at least one receiver")
    w = worst_receiver(transmitter, receivers, gains)
    return required_power(gains[transmitter, w], r_min, params), w
