import math

import numpy as np
import pytest
from scipy import integrate

from cellfluid import (
    exponential_dwell,
    handoff_dwell,
    new_call_dwell,
    survival_transform,
    th_cdf,
    tn_cdf,
)


def mc_dwell_times(kind, cell_radius, v_max, n, seed):
    """Independent Monte Carlo of the geometric dwell construction."""
    rng = np.random.default_rng(seed)
    if kind == "new-call":
        r = cell_radius * np.sqrt(rng.random(n))
        phi = np.pi * rng.random(n)
        dist = -r * np.cos(phi) + np.sqrt(cell_radius**2 - (r * np.sin(phi)) ** 2)
    else:
        theta = (np.pi / 2) * rng.random(n)  # |theta|, symmetric
        dist = 2.0 * cell_radius * np.cos(theta)
    speed = v_max * (1.0 - rng.random(n))
    return dist / speed


class TestNewCall:
    def test_zero_time(self):
        assert tn_cdf(0.0, new_call_dwell(1.0, 1.0)) == 0.0

    def test_limit(self):
        d = new_call_dwell(1.0, 1.0)
        assert tn_cdf(1e6, d) >= 0.999

    def test_against_monte_carlo(self):
        d = new_call_dwell(1.0, 1.0)
        times = mc_dwell_times("new-call", 1.0, 1.0, 10_000_000, seed=101)
        emp = float((times <= 1.0).mean())
        se = math.sqrt(emp * (1 - emp) / times.size)
        assert abs(tn_cdf(1.0, d) - emp) <= 3 * se

    def test_against_direct_quadrature(self):
        # same construction evaluated as a nested integral
        d = new_call_dwell(1.5, 0.4)

        def dist_cdf(s):
            def integrand(x):
                c = (1 - x * x - s * s) / (2 * s * x)
                return 2 * x / np.pi * np.arccos(np.clip(c, -1.0, 1.0))

            val, _ = integrate.quad(integrand, 0, 1, points=[abs(1 - s)], limit=200)
            return val

        for t in (0.5, 2.0, 5.0, 12.0):
            q = d.v_max * t / d.cell_radius
            val, _ = integrate.quad(dist_cdf, 0.0, min(q, 2.0), limit=200)
            expected = val / q if q <= 2 else 1.0 - (2.0 - val) / q
            assert d.cdf(t) == pytest.approx(expected, abs=1e-8)


class TestHandoff:
    def test_zero_time(self):
        assert th_cdf(0.0, handoff_dwell(1.0, 1.0)) == 0.0

    def test_exponential_kind_closed_form(self):
        eta = 0.7
        d = exponential_dwell(eta)
        assert th_cdf(1 / eta, d) == pytest.approx(1 - math.exp(-1), rel=1e-12)

    def test_against_monte_carlo(self):
        d = handoff_dwell(1.0, 1.0)
        times = mc_dwell_times("handoff", 1.0, 1.0, 10_000_000, seed=202)
        emp = float((times <= 2.0).mean())
        se = math.sqrt(emp * (1 - emp) / times.size)
        assert abs(th_cdf(2.0, d) - emp) <= 3 * se


class TestSurvivalTransform:
    def test_exponential_closed_form(self):
        assert survival_transform(exponential_dwell(2.0), 2.0) == pytest.approx(0.5)
        assert survival_transform(exponential_dwell(3.0), 1.0) == pytest.approx(0.75)

    def test_large_mu_limit(self):
        assert survival_transform(new_call_dwell(1.0, 1.0), 1e12) <= 1e-9

    def test_against_monte_carlo(self):
        d = new_call_dwell(1.0, 1.0)
        times = mc_dwell_times("new-call", 1.0, 1.0, 10_000_000, seed=303)
        values = np.exp(-0.025 * times)
        emp = float(values.mean())
        se = float(values.std(ddof=1)) / math.sqrt(times.size)
        assert abs(survival_transform(d, 0.025) - emp) <= 3 * se

    @pytest.mark.parametrize("mu", [1e-3, 0.1, 1.0, 25.0])
    def test_bounded_open_interval(self, mu):
        for d in (new_call_dwell(2.0, 0.5), handoff_dwell(2.0, 0.5)):
            value = survival_transform(d, mu)
            assert 0.0 < value < 1.0

    def test_immobile_degenerate(self):
        d = exponential_dwell(0.0)
        assert survival_transform(d, 0.5) == 0.0
        assert float(d.cdf(1e6)) == 0.0


@pytest.mark.parametrize(
    "dist",
    [new_call_dwell(1.0, 1.0), handoff_dwell(1.0, 1.0), new_call_dwell(3.0, 0.2)],
    ids=["new-call", "handoff", "new-call-scaled"],
)
class TestDistributionProperties:
    def test_cdf_monotone_and_bounded(self, dist):
        grid = np.linspace(0.0, 40.0 * dist.cell_radius / dist.v_max, 1000)
        values = dist.cdf(grid)
        assert np.all(values >= 0.0) and np.all(values <= 1.0)
        assert np.all(np.diff(values) >= -1e-12)

    def test_pdf_matches_cdf_derivative(self, dist):
        scale = dist.cell_radius / dist.v_max
        grid = np.linspace(0.05 * scale, 6.0 * scale, 200)
        h = 1e-5 * scale
        numeric = (dist.cdf(grid + h) - dist.cdf(grid - h)) / (2 * h)
        assert np.max(np.abs(numeric - dist.pdf(grid))) < 1e-4 / scale

    def test_pdf_integrates_to_one(self, dist):
        kink = 2.0 * dist.cell_radius / dist.v_max
        head, _ = integrate.quad(lambda t: float(dist.pdf(t)), 0, kink, limit=200)
        tail, _ = integrate.quad(lambda t: float(dist.pdf(t)), kink, np.inf, limit=200)
        assert head + tail == pytest.approx(1.0, abs=1e-8)


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        new_call_dwell(1.0, 1.0).cdf(-0.1)


def test_kind_guards():
    with pytest.raises(ValueError):
        tn_cdf(1.0, handoff_dwell(1.0, 1.0))
    with pytest.raises(ValueError):
        th_cdf(1.0, new_call_dwell(1.0, 1.0))


def test_bad_parameters_rejected():
    with pytest.raises(ValueError):
        new_call_dwell(0.0, 1.0)
    with pytest.raises(ValueError):
        exponential_dwell(-1.0)
    with pytest.raises(ValueError):
        survival_transform(exponential_dwell(1.0), 0.0)
