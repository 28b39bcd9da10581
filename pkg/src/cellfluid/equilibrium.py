"""Birth-death equilibrium of channels in use at one base station.

Occupancy j goes up at the combined new-call + handoff attempt rate and
down at j times the channel release rate, truncated at the channel count,
so the stationary law is a truncated Poisson in the offered load.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChannelEquilibrium:
    """Stationary occupancy probabilities P_0..P_C for one base station."""

    probs: np.ndarray
    up_rate: float
    down_rate_unit: float  # per-channel release rate
    channels: int

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", probs)
        if probs.shape != (self.channels + 1,):
            raise ValueError(
                f"probs must have length channels+1 = {self.channels + 1}, got {probs.shape}"
            )
        if np.any(probs < 0) or not np.isclose(probs.sum(), 1.0, atol=1e-9):
            raise ValueError("probs must be nonnegative and sum to 1")


def equilibrium(up_rate: float, mu_H: float, channels: int) -> ChannelEquilibrium:
    """Stationary occupancy distribution of the truncated birth-death chain.

    Uses the ratio recurrence P_{j+1}/P_j = up_rate/((j+1) mu_H) in log space
    rather than raw factorial terms, so large loads and channel counts do
    not overflow.
    """
    if not (math.isfinite(up_rate) and math.isfinite(mu_H)):
        raise ValueError("rates must be finite")
    if up_rate < 0 or mu_H <= 0:
        raise ValueError("need up_rate >= 0 and mu_H > 0")
    if channels < 1:
        raise ValueError("channels must be >= 1")

    if up_rate == 0.0:
        probs = np.zeros(channels + 1)
        probs[0] = 1.0
    else:
        j = np.arange(1, channels + 1, dtype=float)
        log_ratio = np.log(up_rate) - np.log(j * mu_H)
        log_w = np.concatenate(([0.0], np.cumsum(log_ratio)))
        log_w -= log_w.max()
        probs = np.exp(log_w)
        probs /= probs.sum()
    return ChannelEquilibrium(
        probs=probs, up_rate=up_rate, down_rate_unit=mu_H, channels=channels
    )


def tail_at_least(eq: ChannelEquilibrium, i: int) -> float:
    """P[occupancy >= i], an exact partial sum; i must lie in 0..channels."""
    if not (0 <= i <= eq.channels):
        raise IndexError(f"i must be in 0..{eq.channels}, got {i}")
    return float(eq.probs[i:].sum())


def blocking(eq: ChannelEquilibrium) -> float:
    """Probability that all channels are busy (P_C).

    This is both the new-call blocking probability and the handoff failure
    probability: the chain does not distinguish the two arrival streams.
    """
    return float(eq.probs[-1])
