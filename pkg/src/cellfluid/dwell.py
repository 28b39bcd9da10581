"""Cell-residence (dwell) time distributions.

Two geometric kinds share one construction: a mobile crosses a circular
cell of radius R at a speed drawn uniformly from (0, v_max], so the dwell
time is (travel distance)/speed.

* new-call kind: the call starts at a position uniform over the disk and
  heads in a uniform direction; the travel distance is the straight-line
  distance to the boundary.
* handoff kind: the mobile enters across the boundary, so the travel
  distance is a chord 2R*cos(theta) with theta uniform on (-pi/2, pi/2).

Both travel-distance laws reduce to elementary closed forms (in units of R):

    new-call   A(s) = (2/pi) [ asin(s/2) + (s/2) sqrt(1 - s^2/4) ]
    handoff    A(s) = (2/pi)  asin(s/2)

for s in [0, 2].  Mixing over the uniform speed gives, with q = v_max*t/R,

    F_T(t) = Iq(q)/q          (q <= 2)
    F_T(t) = 1 - m1/q         (q > 2)

where Iq is the antiderivative of A and m1 = E[distance]/R.  Because the
speed density is positive near zero the dwell means are infinite; nothing
here assumes E[T] exists.

An exponential kind (including the rate-0 "never leaves" degenerate) is
provided as an analytic anchor and as the immobile limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
from scipy import integrate

from .errors import QuadratureError

_TWO_OVER_PI = 2.0 / math.pi


def _as_time(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be nonnegative")
    return t


class DwellDistribution:
    """Base interface: cdf(t), pdf(t), survival_transform(mu)."""

    kind: str

    def cdf(self, t):
        raise NotImplementedError

    def pdf(self, t):
        raise NotImplementedError

    def survival_transform(self, mu: float) -> float:
        """E[exp(-mu*T)]: probability an exponential(mu) call outlasts the dwell.

        Computed by quadrature against the dwell pdf.
        """
        if not (mu > 0):
            raise ValueError("mu must be positive")
        pieces = []
        breaks = [b for b in self._breakpoints() if b > 0]
        lo = 0.0
        for b in breaks:
            pieces.append((lo, b))
            lo = b
        pieces.append((lo, np.inf))
        total = 0.0
        err = 0.0
        for a, b in pieces:
            val, abserr = integrate.quad(
                lambda t: math.exp(-mu * t) * float(self.pdf(t)),
                a,
                b,
                epsabs=1e-12,
                epsrel=1e-11,
                limit=200,
            )
            total += val
            err += abserr
        if err > 1e-6:
            raise QuadratureError(
                f"survival transform integral error {err:.2e} exceeds tolerance"
            )
        return min(max(total, 0.0), 1.0)

    def _breakpoints(self):
        """Times where the cdf/pdf change analytic form."""
        return ()


@dataclass(frozen=True)
class _GeometricDwell(DwellDistribution):
    """Speed-mixed travel across a circular cell; subclasses fix A(s)."""

    cell_radius: float
    v_max: float

    def __post_init__(self):
        if not (self.cell_radius > 0 and self.v_max > 0):
            raise ValueError("cell_radius and v_max must be positive")

    # distance-law pieces in units of R, on s in [0, 2]
    def _dist_cdf(self, s):
        raise NotImplementedError

    def _dist_cdf_integral(self, s):
        raise NotImplementedError

    _mean_dist: ClassVar[float]
    _dist_density0: ClassVar[float]  # A'(0), for the pdf limit at t=0

    def _scaled(self, t):
        return self.v_max * _as_time(t) / self.cell_radius

    def cdf(self, t):
        q = self._scaled(t)
        scalar = q.ndim == 0
        q = np.atleast_1d(q)
        out = np.empty_like(q)
        zero = q == 0.0
        body = (~zero) & (q <= 2.0)
        tail = q > 2.0
        out[zero] = 0.0
        out[body] = self._dist_cdf_integral(q[body]) / q[body]
        out[tail] = 1.0 - self._mean_dist / q[tail]
        return float(out[0]) if scalar else out

    def pdf(self, t):
        q = self._scaled(t)
        scalar = q.ndim == 0
        q = np.atleast_1d(q)
        rate = self.v_max / self.cell_radius
        out = np.empty_like(q)
        small = q < 1e-7
        body = (~small) & (q <= 2.0)
        tail = q > 2.0
        # F = Iq(q)/q so f = rate*(A(q)q - Iq(q))/q^2; series at 0 avoids 0/0
        out[small] = rate * self._dist_density0 / 2.0
        qb = q[body]
        out[body] = rate * (self._dist_cdf(qb) * qb - self._dist_cdf_integral(qb)) / qb**2
        out[tail] = rate * self._mean_dist / q[tail] ** 2
        return float(out[0]) if scalar else out

    def _breakpoints(self):
        return (2.0 * self.cell_radius / self.v_max,)


class NewCallDwell(_GeometricDwell):
    """Dwell from a uniform position in the disk, uniform heading."""

    kind = "new-call"
    _mean_dist = 8.0 / (3.0 * math.pi)
    _dist_density0 = 2.0 / math.pi

    def _dist_cdf(self, s):
        return _TWO_OVER_PI * (
            np.arcsin(s / 2.0) + (s / 2.0) * np.sqrt(np.clip(1.0 - s * s / 4.0, 0.0, None))
        )

    def _dist_cdf_integral(self, s):
        root = np.sqrt(np.clip(1.0 - s * s / 4.0, 0.0, None))
        return _TWO_OVER_PI * (
            s * np.arcsin(s / 2.0) + 2.0 * root - (2.0 / 3.0) * root**3 - 4.0 / 3.0
        )


class HandoffDwell(_GeometricDwell):
    """Dwell after boundary entry: chord 2R*cos(theta), theta uniform."""

    kind = "handoff"
    _mean_dist = 4.0 / math.pi
    _dist_density0 = 1.0 / math.pi

    def _dist_cdf(self, s):
        return _TWO_OVER_PI * np.arcsin(s / 2.0)

    def _dist_cdf_integral(self, s):
        root = np.sqrt(np.clip(1.0 - s * s / 4.0, 0.0, None))
        return _TWO_OVER_PI * (s * np.arcsin(s / 2.0) + 2.0 * root - 2.0)


@dataclass(frozen=True)
class ExponentialDwell(DwellDistribution):
    """Exponential dwell with the given rate.

    rate == 0 is the documented immobile degenerate: the mobile never leaves
    the cell, cdf is identically 0 and the survival transform is 0.
    """

    rate: float
    kind = "exponential"

    def __post_init__(self):
        if self.rate < 0 or not math.isfinite(self.rate):
            raise ValueError("rate must be finite and >= 0")

    def cdf(self, t):
        t = _as_time(t)
        return -np.expm1(-self.rate * t) if self.rate > 0 else np.zeros_like(t) + 0.0

    def pdf(self, t):
        t = _as_time(t)
        return self.rate * np.exp(-self.rate * t)

    def survival_transform(self, mu: float) -> float:
        if not (mu > 0):
            raise ValueError("mu must be positive")
        return self.rate / (self.rate + mu)


def new_call_dwell(cell_radius: float, v_max: float) -> NewCallDwell:
    return NewCallDwell(cell_radius=cell_radius, v_max=v_max)


def handoff_dwell(cell_radius: float, v_max: float) -> HandoffDwell:
    return HandoffDwell(cell_radius=cell_radius, v_max=v_max)


def exponential_dwell(rate: float) -> ExponentialDwell:
    return ExponentialDwell(rate=rate)


def tn_cdf(t, d: DwellDistribution):
    """CDF of the new-call dwell time."""
    if d.kind not in ("new-call", "exponential"):
        raise ValueError(f"tn_cdf expects a new-call dwell, got kind {d.kind!r}")
    return d.cdf(t)


def th_cdf(t, d: DwellDistribution):
    """CDF of the after-handoff dwell time."""
    if d.kind not in ("handoff", "exponential"):
        raise ValueError(f"th_cdf expects a handoff dwell, got kind {d.kind!r}")
    return d.cdf(t)


def survival_transform(d: DwellDistribution, mu: float) -> float:
    """E[exp(-mu*T)] for dwell T; see DwellDistribution.survival_transform."""
    return d.survival_transform(mu)
