"""Channel holding time: distribution, exponential fit, and the coupled
solution for the handoff rate.

A channel is held from acquisition (new call or handoff in) until release
(completion or handoff out), so the holding time is the minimum of the
remaining exponential call duration and the cell dwell time.  Mixing the
new-call and handoff populations by their accepted-rate weights gives

    F_TH(t) = 1 - exp(-mu_M t)
              + exp(-mu_M t)/(1+gc) * (F_Tn(t) + gc * F_Th(t))

with gc the accepted-handoff to accepted-new-call ratio.  The exponential
approximation mu_H matches the mean: 1/mu_H = integral of (1 - F_TH).

The handoff attempt rate and mu_H are coupled through the blocking
probability of the channel birth-death chain, and solved as a damped fixed
point.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .dwell import DwellDistribution
from .equilibrium import ChannelEquilibrium, blocking, equilibrium
from .errors import ModelError, QuadratureError
from .params import ScenarioParams, derive, validate

RATE_MODES = ("per-cell", "paper-literal")


def fthn_cdf(t, mu_M: float, dwell_n: DwellDistribution):
    """Holding-time CDF for a call that has not been handed off yet."""
    t = np.asarray(t, dtype=float)
    ftm = -np.expm1(-mu_M * t)
    return ftm + dwell_n.cdf(t) * (1.0 - ftm)


def fthh_cdf(t, mu_M: float, dwell_h: DwellDistribution):
    """Holding-time CDF for a call observed after a handoff."""
    t = np.asarray(t, dtype=float)
    ftm = -np.expm1(-mu_M * t)
    return ftm + dwell_h.cdf(t) * (1.0 - ftm)


def fth_cdf(t, mu_M: float, gamma_c: float, dwell_n: DwellDistribution, dwell_h: DwellDistribution):
    """Channel holding time CDF: rate-weighted mix of the two populations."""
    if gamma_c < 0:
        raise ValueError("gamma_c must be >= 0")
    t = np.asarray(t, dtype=float)
    decay = np.exp(-mu_M * t)
    mix = (dwell_n.cdf(t) + gamma_c * dwell_h.cdf(t)) / (1.0 + gamma_c)
    return -np.expm1(-mu_M * t) + decay * mix


def fth_pdf(t, mu_M: float, gamma_c: float, dwell_n: DwellDistribution, dwell_h: DwellDistribution):
    """Density of the channel holding time (derivative of fth_cdf)."""
    if gamma_c < 0:
        raise ValueError("gamma_c must be >= 0")
    t = np.asarray(t, dtype=float)
    decay = np.exp(-mu_M * t)
    w = 1.0 / (1.0 + gamma_c)
    mix_cdf = dwell_n.cdf(t) + gamma_c * dwell_h.cdf(t)
    mix_pdf = dwell_n.pdf(t) + gamma_c * dwell_h.pdf(t)
    return mu_M * decay + decay * w * mix_pdf - mu_M * decay * w * mix_cdf


def fit_mu_H(fth, *, breakpoints=()) -> float:
    """Exponential rate whose complementary CDF has the same integral as
    the given holding-time CDF, i.e. 1/mu_H = integral of (1 - fth(t)).

    `fth` is any proper CDF callable; `breakpoints` lists times where its
    analytic form changes, to help the quadrature.
    """
    # bracket the effective support first: a breakpoint far beyond it (for
    # near-immobile dwells it can sit at ~1e9) must not stop the quadrature
    # from resolving the mass near the origin
    upper = 1.0
    while 1.0 - float(fth(upper)) > 1e-13:
        upper *= 2.0
        if upper > 1e15:
            raise QuadratureError("holding-time CDF does not approach 1")
    edges = {b for b in breakpoints if 0.0 < b < upper}
    # dyadic sub-edges keep every piece well scaled for the quadrature
    scale = 1.0
    while scale < upper:
        edges.add(scale)
        scale *= 2.0
    pieces = []
    lo = 0.0
    for b in sorted(edges):
        pieces.append((lo, b))
        lo = b
    pieces.append((lo, upper))

    def complement(u):
        return 1.0 - float(fth(u))

    def piece(a, b):
        # quad's IntegrationWarnings are advisory; accuracy is gated below
        # on the accumulated abserr instead
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            return integrate.quad(
                complement, a, b, epsabs=1e-12, epsrel=1e-10, limit=400
            )

    mean = 0.0
    err = 0.0
    for a, b in pieces:
        val, abserr = piece(a, b)
        mean += val
        err += abserr
    # finite doubling pieces instead of one semi-infinite transform: the
    # latter reports junk round-off error when the integrand is ~0 everywhere
    while True:
        val, abserr = piece(upper, 2.0 * upper)
        mean += val
        err += abserr
        upper *= 2.0
        if val < 1e-12 and complement(upper) < 1e-13:
            break
        if upper > 1e15:
            raise QuadratureError("holding-time tail mass does not vanish")
    if not math.isfinite(mean) or mean <= 0:
        raise QuadratureError(f"holding-time mean integral came out as {mean!r}")
    if err > 1e-6 * max(mean, 1.0):
        raise QuadratureError(f"holding-time mean integral error {err:.2e} too large")
    return 1.0 / mean


def _fit_mu_H_mixed(mu_M, gamma_c, dwell_n, dwell_h) -> float:
    breaks = list(getattr(dwell_n, "_breakpoints", tuple)())
    breaks += list(getattr(dwell_h, "_breakpoints", tuple)())
    return fit_mu_H(
        lambda t: fth_cdf(t, mu_M, gamma_c, dwell_n, dwell_h), breakpoints=breaks
    )


@dataclass(frozen=True)
class HoldingTimeSolution:
    """Converged handoff/holding quantities plus fixed-point diagnostics."""

    lambda_Rh: float
    mu_H: float
    gamma_c: float
    lambda_Rc: float
    lambda_Rhc: float
    p_block: float
    p_handoff_fail: float
    iterations: int
    converged: bool
    p_call_outlasts_new: float  # E[exp(-mu_M T_n)]
    p_call_outlasts_handoff: float  # E[exp(-mu_M T_h)]

    def fth(self, t, mu_M: float, dwell_n, dwell_h):
        """Evaluate the holding-time CDF at the converged gamma_c."""
        return fth_cdf(t, mu_M, self.gamma_c, dwell_n, dwell_h)


def default_coupling(lam_eff, lam_Rh, mu_H, channels) -> ChannelEquilibrium:
    """Channel occupancy equilibrium fed back into the fixed point."""
    return equilibrium(lam_eff + lam_Rh, mu_H, channels)


def solve_fixed_point(
    params: ScenarioParams,
    dwell_n: DwellDistribution,
    dwell_h: DwellDistribution,
    coupling=default_coupling,
    *,
    rate_mode: str = "per-cell",
    tol: float = 1e-6,
    max_iter: int = 200,
) -> HoldingTimeSolution:
    """Solve the two-unknown system (handoff attempt rate, mu_H).

    Each sweep: handoff flow balance gives the attempt rate from the
    call-outlasts-dwell probabilities, the mean of the mixed holding CDF
    gives mu_H, and the equilibrium callback returns the blocking
    probability closing the loop.  Iterates are damped 50/50 once they
    start to oscillate.  rate_mode picks the new-call rate entering the
    chain: per-cell (density times cell area) or paper-literal (the raw
    density used directly as a rate).
    """
    if rate_mode not in RATE_MODES:
        raise ValueError(f"rate_mode must be one of {RATE_MODES}")
    report = validate(params)
    if not report.ok:
        raise ModelError("invalid parameters: " + "; ".join(report.failures))
    rates = derive(params)
    lam_eff = rates.lambda_cell if rate_mode == "per-cell" else params.lambda_R
    mu_M = params.mu_M

    p_n = dwell_n.survival_transform(mu_M)
    p_h = dwell_h.survival_transform(mu_M)

    p_block = 0.0
    lam_rh = 0.0
    mu_h = mu_M
    gamma_c = 0.0
    lam_rc = lam_eff
    lam_rhc = 0.0
    damped = False
    prev_delta = 0.0
    converged = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        p_fail = p_block  # same truncated chain blocks both streams
        cascade = p_h * (1.0 - p_fail)
        if cascade >= 1.0:
            raise ModelError(
                "unstable handoff cascade: P_H*(1-P_fh) >= 1, "
                "every accepted handoff spawns another"
            )
        lam_rc = lam_eff * (1.0 - p_block)
        proposal = lam_rc * p_n / (1.0 - cascade)
        delta = proposal - lam_rh
        if damped or (prev_delta * delta < 0.0):
            damped = True
            lam_rh_new = 0.5 * lam_rh + 0.5 * proposal
        else:
            lam_rh_new = proposal
        prev_delta = delta

        lam_rhc = lam_rh_new * (1.0 - p_fail)
        gamma_c = lam_rhc / lam_rc
        mu_h_new = _fit_mu_H_mixed(mu_M, gamma_c, dwell_n, dwell_h)

        eq = coupling(lam_eff, lam_rh_new, mu_h_new, params.channels)
        p_block = blocking(eq)

        rel_rh = abs(lam_rh_new - lam_rh) / max(abs(lam_rh), abs(lam_rh_new), 1e-30)
        rel_mu = abs(mu_h_new - mu_h) / max(abs(mu_h), 1e-30)
        lam_rh, mu_h = lam_rh_new, mu_h_new
        if rel_rh < tol and rel_mu < tol:
            converged = True
            break

    return HoldingTimeSolution(
        lambda_Rh=lam_rh,
        mu_H=mu_h,
        gamma_c=gamma_c,
        lambda_Rc=lam_rc,
        lambda_Rhc=lam_rhc,
        p_block=p_block,
        p_handoff_fail=p_block,
        iterations=iterations,
        converged=converged,
        p_call_outlasts_new=p_n,
        p_call_outlasts_handoff=p_h,
    )
