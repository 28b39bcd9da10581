"""Discrete-time simulator of a mobile cellular system.

Base stations sit on a square grid.  Mobiles arrive as a Poisson stream,
each carrying exactly one call: they appear uniformly over the union of
the cell disks, take the nearest base station and one of its channels (or
are blocked and leave), then repeatedly dwell for one time step, move one
step in a direction drawn uniformly from North/South/East/West, and have
their signal quality checked.  Quality fails once the distance to the
assigned base exceeds (2/3)*sqrt(D^2 - (D/2)^2) = D/sqrt(3); the channel
is then released and the call hands off to the nearest base station, or
terminates if no base is within quality range (coverage exit) or the
target has no free channel (handoff failure).  Calls also end when their
exponential session expires.

Speed is drawn once per mobile, uniform on (0, v_max]; the direction is
redrawn every step.  A single seeded generator drives every draw, so a
seed pins the whole run.  Statistics (time-weighted occupancy histogram,
holding-time samples, event counters) start after the warmup.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_QUALITY_FACTOR = 1.0 / math.sqrt(3.0)  # (2/3)*sqrt(D^2 - (D/2)^2) = D/sqrt(3)

_STEPS = ((0.0, 1.0), (0.0, -1.0), (1.0, 0.0), (-1.0, 0.0))  # N, S, E, W


@dataclass(frozen=True)
class SimConfig:
    grid_side: int
    base_spacing: float
    channels_per_base: int
    exp_pulse_mean: float  # mean inter-arrival time, seconds
    mean_session_length: float
    delta_time: float
    v_max: float
    sim_duration: float
    seed: int
    warmup: float | None = None  # defaults to 10x mean session length

    def __post_init__(self):
        checks = [
            ("grid_side", self.grid_side >= 1),
            ("base_spacing", self.base_spacing > 0),
            ("channels_per_base", self.channels_per_base >= 1),
            ("exp_pulse_mean", self.exp_pulse_mean > 0),
            ("mean_session_length", self.mean_session_length > 0),
            ("delta_time", self.delta_time > 0),
            ("v_max", self.v_max > 0),
            ("sim_duration", self.sim_duration > 0),
        ]
        bad = [name for name, ok in checks if not ok]
        if bad:
            raise ValueError(f"non-positive simulation parameters: {', '.join(bad)}")
        if self.warmup is None:
            object.__setattr__(self, "warmup", 10.0 * self.mean_session_length)
        if not (0 <= self.warmup < self.sim_duration):
            raise ValueError("warmup must lie in [0, sim_duration)")


def sim_config(values: dict, seed: int | None = None) -> SimConfig:
    """Build a SimConfig from a parsed scenario dict; `seed` overrides."""
    return SimConfig(
        grid_side=values["grid_side"],
        base_spacing=values["base_spacing"],
        channels_per_base=values["channels"],
        exp_pulse_mean=values["exp_pulse_mean"],
        mean_session_length=values["mean_session_length"],
        delta_time=values["delta_time"],
        v_max=values["v_max"],
        sim_duration=values["sim_duration"],
        seed=values["seed"] if seed is None else seed,
    )


@dataclass
class MobileHost:
    x: float
    y: float
    speed: float
    remaining_session: float
    assigned_base: int
    acquisition_time: float
    channel_held: bool = True


@dataclass
class SimStats:
    """Aggregated run statistics (collected after warmup)."""

    channels: int
    occupancy_time: np.ndarray = field(default=None)
    holding_samples: list = field(default_factory=list)
    arrivals: int = 0
    blocked_new: int = 0
    handoff_attempts: int = 0
    handoff_failures: int = 0
    completions: int = 0
    coverage_exits: int = 0
    observed_time: float = 0.0

    def __post_init__(self):
        if self.occupancy_time is None:
            self.occupancy_time = np.zeros(self.channels + 1)


class BaseGrid:
    """Square array of base stations with spacing D."""

    def __init__(self, grid_side: int, base_spacing: float):
        self.spacing = float(base_spacing)
        side = np.arange(grid_side, dtype=float) * self.spacing
        gx, gy = np.meshgrid(side, side, indexing="ij")
        self.positions = np.column_stack([gx.ravel(), gy.ravel()])
        self.quality_radius = self.spacing * _QUALITY_FACTOR
        self.cell_radius = self.spacing / 2.0

    def nearest(self, x: float, y: float) -> tuple[int, float]:
        """Index of the closest base (lowest index wins ties) and distance."""
        d2 = (self.positions[:, 0] - x) ** 2 + (self.positions[:, 1] - y) ** 2
        idx = int(np.argmin(d2))
        return idx, math.sqrt(d2[idx])

    def in_coverage(self, x: float, y: float) -> bool:
        """Inside some cell disk of radius D/2 (arrival region)."""
        _, dist = self.nearest(x, y)
        return dist <= self.cell_radius


def nearest_base(position, grid: BaseGrid) -> int:
    """Index of the base station closest to `position`."""
    idx, _ = grid.nearest(float(position[0]), float(position[1]))
    return idx


def quality_ok(position, base_position, base_spacing: float) -> bool:
    """Signal quality criterion: within (2/3)sqrt(D^2-(D/2)^2) of the base.

    The boundary itself is acceptable (inclusive comparison).
    """
    if base_spacing <= 0:
        raise ValueError("base_spacing must be positive")
    threshold = (2.0 / 3.0) * math.sqrt(base_spacing**2 - (base_spacing / 2.0) ** 2)
    dx = float(position[0]) - float(base_position[0])
    dy = float(position[1]) - float(base_position[1])
    return math.hypot(dx, dy) <= threshold


def run(config: SimConfig, *, audit: bool = False) -> SimStats:
    """Execute the simulation loop and collect statistics.

    With audit=True, channel-conservation invariants are asserted at every
    step (intended for tests on small configurations).
    """
    rng = np.random.default_rng(config.seed)
    grid = BaseGrid(config.grid_side, config.base_spacing)
    n_bases = grid.positions.shape[0]
    cap = config.channels_per_base
    dt = config.delta_time
    warmup = config.warmup

    stats = SimStats(channels=cap)
    busy = np.zeros(n_bases, dtype=int)
    mobiles: list[MobileHost] = []

    lo = -grid.cell_radius
    hi = (config.grid_side - 1) * grid.spacing + grid.cell_radius

    def draw_position():
        while True:
            x = rng.uniform(lo, hi)
            y = rng.uniform(lo, hi)
            if grid.in_coverage(x, y):
                return x, y

    def release(mobile: MobileHost, when: float, completed: bool):
        busy[mobile.assigned_base] -= 1
        mobile.channel_held = False
        if when >= warmup and mobile.acquisition_time >= warmup:
            stats.holding_samples.append(when - mobile.acquisition_time)
        if completed and when >= warmup:
            stats.completions += 1

    if math.isinf(config.exp_pulse_mean):
        next_arrival = math.inf
    else:
        next_arrival = rng.exponential(config.exp_pulse_mean)

    n_steps = int(round(config.sim_duration / dt))
    for k in range(n_steps):
        t0 = k * dt
        t1 = t0 + dt

        # arrivals due in (t0, t1]
        while next_arrival <= t1:
            t_arr = next_arrival
            next_arrival += rng.exponential(config.exp_pulse_mean)
            x, y = draw_position()
            speed = config.v_max * (1.0 - rng.random())  # uniform on (0, v_max]
            session = rng.exponential(config.mean_session_length)
            base, _ = grid.nearest(x, y)
            if t_arr >= warmup:
                stats.arrivals += 1
            if busy[base] >= cap:
                if t_arr >= warmup:
                    stats.blocked_new += 1
                continue
            busy[base] += 1
            mobiles.append(
                MobileHost(
                    x=x,
                    y=y,
                    speed=speed,
                    remaining_session=session,
                    assigned_base=base,
                    acquisition_time=t_arr,
                )
            )

        # time-weighted occupancy over [t0, t1)
        if t0 >= warmup:
            np.add.at(stats.occupancy_time, busy, dt)
            stats.observed_time += dt

        if mobiles:
            directions = rng.integers(0, 4, size=len(mobiles))
        else:
            directions = ()
        survivors: list[MobileHost] = []
        for mobile, direction in zip(mobiles, directions):
            mobile.remaining_session -= dt
            if mobile.remaining_session <= 0.0:
                release(mobile, t1 + mobile.remaining_session, completed=True)
                continue

            step = mobile.speed * dt
            ddx, ddy = _STEPS[direction]
            mobile.x += step * ddx
            mobile.y += step * ddy

            bx, by = grid.positions[mobile.assigned_base]
            if math.hypot(mobile.x - bx, mobile.y - by) <= grid.quality_radius:
                survivors.append(mobile)
                continue

            # quality failed: release, then hand off or leave
            release(mobile, t1, completed=False)
            target, dist = grid.nearest(mobile.x, mobile.y)
            if dist > grid.quality_radius:
                if t1 >= warmup:
                    stats.coverage_exits += 1
                continue
            if t1 >= warmup:
                stats.handoff_attempts += 1
            if busy[target] >= cap:
                if t1 >= warmup:
                    stats.handoff_failures += 1
                continue
            busy[target] += 1
            mobile.assigned_base = target
            mobile.acquisition_time = t1
            mobile.channel_held = True
            survivors.append(mobile)
        mobiles = survivors

        if audit:
            held = np.zeros(n_bases, dtype=int)
            for mobile in mobiles:
                assert mobile.channel_held and 0 <= mobile.assigned_base < n_bases
                held[mobile.assigned_base] += 1
                bx, by = grid.positions[mobile.assigned_base]
                assert math.hypot(mobile.x - bx, mobile.y - by) <= grid.quality_radius, (
                    "mobile kept a channel outside the quality region"
                )
            assert np.array_equal(held, busy), "channel bookkeeping out of sync"
            assert np.all(busy <= cap), "channel capacity exceeded"

    return stats


def empirical_equilibrium(stats: SimStats) -> np.ndarray:
    """Time-weighted busy-channel fractions pooled over all base stations."""
    total = stats.occupancy_time.sum()
    if total <= 0:
        raise ValueError("no observed time: statistics are empty")
    return stats.occupancy_time / total


def empirical_holding(stats: SimStats, bins: int = 50):
    """Sample mean and histogram (edges, counts) of channel holding times."""
    if not stats.holding_samples:
        raise ValueError("no completed holding intervals")
    samples = np.asarray(stats.holding_samples)
    counts, edges = np.histogram(samples, bins=bins)
    return float(samples.mean()), (edges, counts)
