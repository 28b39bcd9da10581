"""Equilibrium buffer-fill distributions for superposed on-off sources.

Each source alternates between "off" and "on" (unit emission rate while
on), with the on-to-off intensity normalized to one and off-to-on
intensity lambda_on.  A shared buffer drains at service_rate c.  With i of
N sources on, F_i(x) is the stationary probability that i are on and the
buffer holds at most x, satisfying

    D dF/dx = M F,   D = diag(i - c),   M = tridiagonal source generator,

solved through the generalized eigenproblem z D phi = M phi.  The buffer
CDF keeps the zero mode (the binomial stationary vector) plus the modes
with negative z, whose coefficients are pinned by F_i(0) = 0 on the
overload states i > c.

Two extensions weight the fixed-population solution by a base station's
channel-occupancy equilibrium P_j:

* mobile-literal: scales the i-th solution component by P_{j=i} (the
  verbatim eigenvector weighting), then renormalizes by the captured mass
  so the survivor is still a proper tail function.  The unnormalized
  weighted stationary vector is exposed for inspection.
* mobile-mixture: conditions on the number of sources present,
  sum_j P_j * (fixed solution with N = j); defensible when occupancy
  changes much more slowly than the buffer drains.

The literal weighting is ambiguous at the source (the printed stationary
formula has no dependence on i); both modes are emitted so the Monte Carlo
oracle can arbitrate empirically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.special

from .equilibrium import ChannelEquilibrium, tail_at_least
from .errors import ModelError

MODES = ("fixed", "mobile-literal", "mobile-mixture")

_STATE_TOL = 1e-9  # service rate must keep clear of integer source counts
_EIG_RESIDUAL_TOL = 1e-9
_BOUNDARY_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class FluidModel:
    """Source population, rates, drain, and solution mode."""

    n_sources: int
    lambda_on: float
    service_rate: float
    mode: str = "fixed"
    channel_eq: ChannelEquilibrium | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.n_sources < 1:
            raise ValueError("n_sources must be >= 1")
        if not (self.lambda_on > 0 and math.isfinite(self.lambda_on)):
            raise ValueError("lambda_on must be positive and finite")
        c = self.service_rate
        if not (c > 0 and math.isfinite(c)):
            raise ValueError("service_rate must be positive and finite")
        nearest = round(c)
        if 0 <= nearest <= self.n_sources and abs(c - nearest) <= _STATE_TOL:
            raise ModelError(
                f"service_rate {c} coincides with source-count state {nearest}; "
                f"the drift matrix would be singular. Perturb it, e.g. c = {c} +/- 1e-6."
            )
        if self.mode != "fixed":
            if self.channel_eq is None:
                raise ValueError("mobile modes require channel_eq")
            if self.channel_eq.channels != self.n_sources:
                raise ValueError(
                    "n_sources must equal channel_eq.channels in mobile modes"
                )

    @property
    def on_probability(self) -> float:
        return self.lambda_on / (1.0 + self.lambda_on)

    @property
    def mean_input(self) -> float:
        return self.n_sources * self.on_probability

    @property
    def is_stable(self) -> bool:
        return self.mean_input < self.service_rate

    @classmethod
    def fixed(cls, n_sources, lambda_on, service_rate):
        return cls(n_sources=n_sources, lambda_on=lambda_on, service_rate=service_rate)

    @classmethod
    def mobile(cls, channel_eq, lambda_on, service_rate, *, literal=False):
        return cls(
            n_sources=channel_eq.channels,
            lambda_on=lambda_on,
            service_rate=service_rate,
            mode="mobile-literal" if literal else "mobile-mixture",
            channel_eq=channel_eq,
        )


def build_matrices(model: FluidModel):
    """Drift matrix D = diag(i - c) and source generator M (columns sum to 0)."""
    return _matrices(model.n_sources, model.lambda_on, model.service_rate)


def _matrices(n, lam, c):
    states = np.arange(n + 1, dtype=float)
    if np.any(np.abs(states - c) <= _STATE_TOL):
        raise ModelError(f"service rate {c} coincides with a source-count state")
    d = np.diag(states - c)
    m = np.zeros((n + 1, n + 1))
    up = (n - states[:-1]) * lam  # i -> i+1
    down = states[1:]  # i -> i-1, unit on->off rate per source
    m[np.arange(1, n + 1), np.arange(n)] = up
    m[np.arange(n), np.arange(1, n + 1)] = down
    np.fill_diagonal(m, -(np.concatenate((up, [0.0])) + np.concatenate(([0.0], down))))
    return d, m


def solve_eigen(d, m):
    """All eigenpairs of z D phi = M phi, sorted by ascending z.

    Eigenvectors are returned as columns, scaled to unit max-abs component
    with the largest component positive.  Raises if any pair fails the
    residual test or a genuinely complex pair shows up (the birth-death
    structure guarantees real spectra).
    """
    vals, vecs = scipy.linalg.eig(m, d)
    if np.max(np.abs(vals.imag)) > 1e-9 * max(1.0, np.max(np.abs(vals.real))):
        raise ModelError("complex eigenvalues from a birth-death fluid system")
    z = vals.real
    phi = vecs.real
    order = np.argsort(z)
    z = z[order]
    phi = phi[:, order]
    for k in range(phi.shape[1]):
        col = phi[:, k]
        peak = np.argmax(np.abs(col))
        phi[:, k] = col / col[peak]
    residual = np.max(np.abs(m @ phi - d @ (phi * z)), axis=0)
    if np.any(residual > _EIG_RESIDUAL_TOL):
        raise ModelError(f"eigen residual {residual.max():.2e} above tolerance")
    return z, phi


def stationary_fixed(n_sources: int, lambda_on: float) -> np.ndarray:
    """Binomial stationary law of the on-count, on-probability lam/(1+lam)."""
    if lambda_on <= 0:
        raise ValueError("lambda_on must be positive")
    p = lambda_on / (1.0 + lambda_on)
    i = np.arange(n_sources + 1)
    log_comb = (
        scipy.special.gammaln(n_sources + 1)
        - scipy.special.gammaln(i + 1)
        - scipy.special.gammaln(n_sources - i + 1)
    )
    return np.exp(log_comb + i * math.log(p) + (n_sources - i) * math.log1p(-p))


def stationary_mobile(
    channel_eq: ChannelEquilibrium, lambda_on: float, *, literal: bool = False
) -> np.ndarray:
    """Stationary on-count law when the source population is itself random.

    Mixture form (default): F_i(inf) = sum_{j>=i} P_j * Binom(i; j, p),
    which sums to 1 over i = 0..C.  literal=True instead evaluates the
    as-printed formula sum_{j=1..C} P_j * Binom(j; C, p) verbatim; it has
    no i dependence (suspected typo upstream) and is returned as a constant
    vector without normalization.
    """
    c = channel_eq.channels
    p = lambda_on / (1.0 + lambda_on)
    pj = channel_eq.probs
    j = np.arange(c + 1)
    if literal:
        weights = np.exp(
            scipy.special.gammaln(c + 1)
            - scipy.special.gammaln(j + 1)
            - scipy.special.gammaln(c - j + 1)
            + j * math.log(p)
            + (c - j) * math.log1p(-p)
        )
        value = float(np.dot(pj[1:], weights[1:]))
        return np.full(c + 1, value)
    out = np.zeros(c + 1)
    for jj in range(c + 1):
        out[: jj + 1] += pj[jj] * stationary_fixed(jj, lambda_on)
    return out


class BufferSolution:
    """Common evaluation interface for every solution flavor."""

    n_states: int

    @property
    def stationary(self) -> np.ndarray:
        raise NotImplementedError

    def cdf_components(self, x):
        """Matrix F_i(x): rows are source-count states, columns the x grid."""
        raise NotImplementedError

    def cdf(self, x):
        return self.cdf_components(x).sum(axis=0)

    def survivor(self, x):
        """G(x) = 1 - sum_i F_i(x): probability the buffer exceeds x."""
        return 1.0 - self.cdf(x)


def _as_levels(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("buffer level must be nonnegative")
    return np.atleast_1d(x), x.ndim == 0


@dataclass(frozen=True)
class FluidSolution(BufferSolution):
    """Eigen-expansion solution for a fixed source population."""

    model: FluidModel
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, aligned with eigenvalues
    coefficients: np.ndarray  # for the negative-eigenvalue modes
    negative_index: np.ndarray
    f_inf: np.ndarray
    boundary_residual: float

    @property
    def n_states(self) -> int:
        return self.f_inf.size

    @property
    def stationary(self) -> np.ndarray:
        return self.f_inf

    def cdf_components(self, x):
        levels, scalar = _as_levels(x)
        z = self.eigenvalues[self.negative_index]
        phi = self.eigenvectors[:, self.negative_index]
        decay = np.exp(np.outer(z, levels)) * self.coefficients[:, None]
        out = self.f_inf[:, None] + phi @ decay
        return out[:, 0] if scalar else out


@dataclass(frozen=True)
class WeightedSolution(BufferSolution):
    """Occupancy-weighted fixed solution (the literal extension).

    Component i of the base solution is scaled by the probability that
    exactly i channels are held; the total captured mass is divided out so
    cdf/survivor stay a proper distribution.  `weighted_modes` and
    `weighted_mode_sum` keep the raw weighted eigenvectors and their
    component sum for inspection.
    """

    base: FluidSolution
    weights: np.ndarray
    mass: float
    weighted_modes: np.ndarray = field(repr=False)
    weighted_mode_sum: np.ndarray = field(repr=False)

    @property
    def n_states(self) -> int:
        return self.base.n_states

    @property
    def stationary(self) -> np.ndarray:
        return self.weights * self.base.f_inf / self.mass

    def cdf_components(self, x):
        levels, scalar = _as_levels(x)
        out = self.base.cdf_components(levels) * (self.weights[:, None] / self.mass)
        return out[:, 0] if scalar else out


@dataclass(frozen=True)
class MixtureSolution(BufferSolution):
    """Occupancy mixture of per-population solutions."""

    weights: np.ndarray
    branches: tuple  # BufferSolution per source count j = 0..C (None for j = 0)

    @property
    def n_states(self) -> int:
        return self.weights.size

    @property
    def stationary(self) -> np.ndarray:
        out = np.zeros(self.n_states)
        out[0] += self.weights[0]
        for j, branch in enumerate(self.branches):
            if branch is not None:
                out[: j + 1] += self.weights[j] * branch.stationary
        return out

    def cdf_components(self, x):
        levels, scalar = _as_levels(x)
        out = np.zeros((self.n_states, levels.size))
        out[0, :] += self.weights[0]
        for j, branch in enumerate(self.branches):
            if branch is not None:
                out[: j + 1, :] += self.weights[j] * branch.cdf_components(levels)
        return out[:, 0] if scalar else out


@dataclass(frozen=True)
class _TrivialSolution(BufferSolution):
    """Drain exceeds peak input: the buffer is always empty."""

    f_inf: np.ndarray

    @property
    def n_states(self) -> int:
        return self.f_inf.size

    @property
    def stationary(self) -> np.ndarray:
        return self.f_inf

    def cdf_components(self, x):
        levels, scalar = _as_levels(x)
        out = np.repeat(self.f_inf[:, None], levels.size, axis=1)
        return out[:, 0] if scalar else out


def _solve_fixed(n, lam, c) -> BufferSolution:
    f_inf = stationary_fixed(n, lam)
    if c > n:
        return _TrivialSolution(f_inf=f_inf)
    d, m = _matrices(n, lam, c)
    z, phi = solve_eigen(d, m)
    overload = np.arange(n + 1) > c
    neg = np.nonzero(z < -1e-12)[0]
    if neg.size != int(overload.sum()):
        raise ModelError(
            f"expected {int(overload.sum())} decaying modes, found {neg.size}; "
            "the model may be too close to instability"
        )
    a_mat = phi[np.ix_(overload, neg)]
    rhs = -f_inf[overload]
    coeff = np.linalg.solve(a_mat, rhs)
    residual = np.max(np.abs(a_mat @ coeff - rhs)) if rhs.size else 0.0
    if residual > _BOUNDARY_RESIDUAL_TOL:
        raise ModelError(f"boundary system residual {residual:.2e} above tolerance")
    return FluidSolution(
        model=FluidModel(n_sources=n, lambda_on=lam, service_rate=c),
        eigenvalues=z,
        eigenvectors=phi,
        coefficients=coeff,
        negative_index=neg,
        f_inf=f_inf,
        boundary_residual=float(residual),
    )


def solve_buffer(model: FluidModel) -> BufferSolution:
    """Stationary buffer-fill solution for the requested mode."""
    if not model.is_stable:
        raise ModelError(
            f"unstable model: mean input {model.mean_input:.6g} >= "
            f"service rate {model.service_rate:.6g}"
        )
    if model.mode == "fixed":
        return _solve_fixed(model.n_sources, model.lambda_on, model.service_rate)

    pj = model.channel_eq.probs
    if model.mode == "mobile-mixture":
        branches = [None]
        for j in range(1, model.n_sources + 1):
            branches.append(_solve_fixed(j, model.lambda_on, model.service_rate))
        return MixtureSolution(weights=pj.copy(), branches=tuple(branches))

    # mobile-literal
    base = _solve_fixed(model.n_sources, model.lambda_on, model.service_rate)
    if isinstance(base, _TrivialSolution):
        base = FluidSolution(
            model=model,
            eigenvalues=np.zeros(0),
            eigenvectors=np.zeros((model.n_sources + 1, 0)),
            coefficients=np.zeros(0),
            negative_index=np.zeros(0, dtype=int),
            f_inf=base.f_inf,
            boundary_residual=0.0,
        )
    mass = float(np.dot(pj, base.f_inf))
    if mass <= 0:
        raise ModelError("occupancy weighting removed all probability mass")
    weighted_modes = base.eigenvectors * pj[:, None]
    return WeightedSolution(
        base=base,
        weights=pj.copy(),
        mass=mass,
        weighted_modes=weighted_modes,
        weighted_mode_sum=weighted_modes.sum(axis=0),
    )


def survivor(sol: BufferSolution, x):
    """G(x): probability the stationary buffer content exceeds x."""
    return sol.survivor(x)


def mobile_joint(eq: ChannelEquilibrium, sol: BufferSolution, i: int, x):
    """Independence product P[occupancy >= i] * F_i(x)."""
    if not (0 <= i < sol.n_states):
        raise IndexError(f"state i must be in 0..{sol.n_states - 1}")
    tail = tail_at_least(eq, i)
    levels, scalar = _as_levels(x)
    comp = sol.cdf_components(levels)[i]
    out = tail * comp
    return float(out[0]) if scalar else out
