"""Brute-force Monte Carlo references.

Three simulators cross-validate the analytic chain:

* birth-death occupancy (exact jump times) against the closed-form
  channel equilibrium;
* fixed-population on-off fluid buffer against the eigen solver;
* occupancy-modulated fluid buffer (sources arrive, depart, and carry
  their own on/off state) as ground truth for the mobile extensions.

The fluid buffers use fixed-step discretization: sources flip with exact
exponential clocks, the on-count is sampled on a dt grid, and the buffer
follows b <- max(0, b + (on - c) dt), unrolled in vectorized chunks via
the reflected-random-walk identity
b_t = max(b_0 + S_t, S_t - min_{s<=t} S_s).  Standard errors come from
batch means over contiguous time blocks.  Everything is driven by one
seeded generator, so a seed pins the entire event sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .equilibrium import equilibrium


@dataclass(frozen=True)
class OracleEstimate:
    """Point estimates with batch-means standard errors."""

    levels: np.ndarray
    estimates: np.ndarray
    stderrs: np.ndarray
    samples: int
    seed: int

    def ci99_halfwidth(self) -> np.ndarray:
        return 2.5758 * self.stderrs

    def within_ci99(self, values) -> np.ndarray:
        return np.abs(np.asarray(values) - self.estimates) <= self.ci99_halfwidth()


def simulate_birth_death(
    up_rate: float,
    mu_H: float,
    channels: int,
    events: int = 1_000_000,
    seed: int = 0,
    batches: int = 32,
) -> OracleEstimate:
    """Time-weighted occupancy fractions from an exact-jump simulation.

    Returns an estimate per occupancy level 0..channels.  With up_rate 0
    the chain is stuck at 0 and the degenerate answer is returned directly.
    """
    if events < 10_000:
        raise ValueError("need at least 1e4 events for meaningful estimates")
    levels = np.arange(channels + 1, dtype=float)
    if up_rate == 0.0:
        est = np.zeros(channels + 1)
        est[0] = 1.0
        return OracleEstimate(levels, est, np.zeros(channels + 1), events, seed)

    rng = np.random.default_rng(seed)
    neglog = -np.log(rng.random(events))
    pick = rng.random(events)

    occ = np.zeros((batches, channels + 1))
    batch_time = np.zeros(batches)
    per_batch = events // batches
    j = 0
    for k in range(events):
        rate_up = up_rate if j < channels else 0.0
        rate_dn = j * mu_H
        total = rate_up + rate_dn
        dt = neglog[k] / total
        b = min(k // per_batch, batches - 1)
        occ[b, j] += dt
        batch_time[b] += dt
        if pick[k] * total < rate_up:
            j += 1
        else:
            j -= 1

    fractions = occ / batch_time[:, None]
    estimates = occ.sum(axis=0) / batch_time.sum()
    stderrs = fractions.std(axis=0, ddof=1) / math.sqrt(batches)
    return OracleEstimate(levels, estimates, stderrs, events, seed)


def _on_off_jump_times(n_sources, lambda_on, horizon, rng):
    """Exact jump trajectory of the aggregate on-count of n i.i.d. sources.

    Returns (times, counts): counts[m] holds on [times[m], times[m+1]).
    The initial count is drawn from the stationary binomial law.
    """
    p = lambda_on / (1.0 + lambda_on)
    k = int(rng.binomial(n_sources, p))
    times = [0.0]
    counts = [k]
    t = 0.0
    while True:
        rate_on = (n_sources - k) * lambda_on
        rate_off = float(k)
        total = rate_on + rate_off
        if total == 0.0:
            break
        t += rng.exponential(1.0 / total)
        if t >= horizon:
            break
        k += 1 if rng.random() * total < rate_on else -1
        times.append(t)
        counts.append(k)
    return np.asarray(times), np.asarray(counts, dtype=float)


def _mobile_jump_times(up_rate, mu_H, channels, lambda_on, horizon, rng):
    """Exact jump trajectory of the on-count when sources come and go.

    The source count follows the truncated birth-death chain; each present
    source carries its own on/off state.  New sources arrive off, a
    departure removes a uniformly chosen source regardless of its state.
    The initial population is drawn from the channel equilibrium with each
    initial source on with the stationary on-probability.
    """
    p_on = lambda_on / (1.0 + lambda_on)
    if up_rate > 0.0:
        eq = equilibrium(up_rate, mu_H, channels)
        j0 = int(rng.choice(channels + 1, p=eq.probs))
    else:
        j0 = 0
    states = [bool(rng.random() < p_on) for _ in range(j0)]

    times = [0.0]
    counts = [float(sum(states))]
    t = 0.0
    while True:
        j = len(states)
        n_on = sum(states)
        r_arrive = up_rate if j < channels else 0.0
        r_depart = j * mu_H
        r_turn_off = float(n_on)
        r_turn_on = (j - n_on) * lambda_on
        total = r_arrive + r_depart + r_turn_off + r_turn_on
        if total == 0.0:
            break
        t += rng.exponential(1.0 / total)
        if t >= horizon:
            break
        u = rng.random() * total
        if u < r_arrive:
            states.append(False)
        elif u < r_arrive + r_depart:
            states.pop(int(rng.integers(j)))
        elif u < r_arrive + r_depart + r_turn_off:
            target = int(rng.integers(n_on))
            for idx, s in enumerate(states):
                if s:
                    if target == 0:
                        states[idx] = False
                        break
                    target -= 1
        else:
            target = int(rng.integers(j - n_on))
            for idx, s in enumerate(states):
                if not s:
                    if target == 0:
                        states[idx] = True
                        break
                    target -= 1
        new_count = float(sum(states))
        if new_count != counts[-1]:
            times.append(t)
            counts.append(new_count)
    return np.asarray(times), np.asarray(counts)


def _buffer_tail_fractions(
    times, counts, c, horizon, dt, query_levels, batches, warmup_fraction
):
    """Pr[buffer > x] on a dt grid driven by a piecewise-constant on-count."""
    levels = np.asarray(query_levels, dtype=float)
    total_steps = int(round(horizon / dt))
    warm = int(total_steps * warmup_fraction)
    batch_len = (total_steps - warm) // batches
    if batch_len < 1:
        raise ValueError("horizon too short for the requested batches")

    hits = np.zeros((batches, levels.size))
    b0 = 0.0
    step = 0
    for chunk_id in range(batches + 1):
        length = warm if chunk_id == 0 else batch_len
        if length == 0:
            continue
        kk = np.arange(step, step + length, dtype=float)
        idx = np.searchsorted(times, kk * dt, side="right") - 1
        g = (counts[idx] - c) * dt
        s = np.cumsum(g)
        runmin = np.minimum.accumulate(s)
        b = np.maximum(b0 + s, s - runmin)
        b0 = b[-1]
        step += length
        if chunk_id > 0:
            hits[chunk_id - 1] = (b[:, None] > levels[None, :]).mean(axis=0)

    estimates = hits.mean(axis=0)
    stderrs = hits.std(axis=0, ddof=1) / math.sqrt(batches)
    return levels, np.clip(estimates, 0.0, 1.0), stderrs, batches * batch_len


def simulate_fluid_fixed(
    n_sources: int,
    lambda_on: float,
    service_rate: float,
    horizon: float,
    dt: float,
    seed: int = 0,
    query_levels=(0.1, 0.5, 1.0, 2.0, 5.0),
    batches: int = 50,
    warmup_fraction: float = 0.02,
) -> OracleEstimate:
    """Empirical Pr[buffer > x] for a fixed population of on-off sources."""
    if dt * max(1.0, lambda_on) >= 0.1:
        raise ValueError("dt too coarse: per-step flip probability must stay < 0.1")
    rng = np.random.default_rng(seed)
    times, counts = _on_off_jump_times(n_sources, lambda_on, horizon, rng)
    levels, est, se, samples = _buffer_tail_fractions(
        times, counts, service_rate, horizon, dt, query_levels, batches, warmup_fraction
    )
    return OracleEstimate(levels, est, se, samples, seed)


def simulate_fluid_mobile(
    bd_rates: tuple,
    lambda_on: float,
    service_rate: float,
    horizon: float,
    dt: float,
    seed: int = 0,
    query_levels=(0.1, 0.5, 1.0, 2.0, 5.0),
    batches: int = 50,
    warmup_fraction: float = 0.02,
) -> OracleEstimate:
    """Empirical Pr[buffer > x] when the source population itself is the
    truncated birth-death chain described by bd_rates = (up_rate, mu_H, C)."""
    up_rate, mu_H, channels = bd_rates
    if dt * max(1.0, lambda_on) >= 0.1:
        raise ValueError("dt too coarse: per-step flip probability must stay < 0.1")
    rng = np.random.default_rng(seed)
    times, counts = _mobile_jump_times(
        up_rate, mu_H, channels, lambda_on, horizon, rng
    )
    levels, est, se, samples = _buffer_tail_fractions(
        times, counts, service_rate, horizon, dt, query_levels, batches, warmup_fraction
    )
    return OracleEstimate(levels, est, se, samples, seed)
