"""Tests for region charts, the Langer transform and the turning-point diagnostics."""

import math

import numpy as np
import pytest

from services.asymptotics_service import (
    boundary_abscissae,
    build_turning_point_chart,
    langer_xi,
    qfun,
    qfun_derivative,
    turning_point,
)
from services.errors import BracketError, RegimeError

H = 0.02


class TestQFunction:

    def test_pure_powers_at_zero_scale(self, cubic):
        x = np.array([0.5, 1.0, 2.0])
        np.testing.assert_allclose(qfun(cubic, x, 0.0), x ** 1.5 / 2.0)

    def test_derivative(self, cubic):
        x, step = 1.7, 1e-6
        difference = (qfun(cubic, x + step, H) - qfun(cubic, x - step, H)) / (2 * step)
        assert qfun_derivative(cubic, x, H) == pytest.approx(difference, rel=1e-7)

    def test_turning_point(self, cubic):
        _, x2, x3, _ = boundary_abscissae(cubic)
        x0 = turning_point(cubic, H)
        assert x2 < x0 < x3
        assert qfun(cubic, x0, H) == pytest.approx(1.0, abs=1e-12)
        assert (x0 ** cubic.delta) == pytest.approx(2.0, rel=0.1)

    def test_turning_point_needs_small_scale(self, cubic):
        with pytest.raises(BracketError):
            turning_point(cubic, 10.0)


class TestLangerTransform:

    def test_sign_follows_turning_point(self, cubic):
        x0 = turning_point(cubic, H)
        assert langer_xi(cubic, x0 - 0.3, H) < 0
        assert langer_xi(cubic, x0 + 0.3, H) > 0
        assert langer_xi(cubic, x0, H, x0=x0) == 0.0

    def test_derivative_identity(self, cubic):
        x0 = turning_point(cubic, H)
        step = 1e-4
        for x, inverse in ((x0 + 0.4, np.arccosh), (x0 - 0.4, np.arccos)):
            upper = abs(langer_xi(cubic, x + step, H, x0=x0)) ** 1.5
            lower = abs(langer_xi(cubic, x - step, H, x0=x0)) ** 1.5
            derivative = abs(upper - lower) / (2 * step)
            assert (2.0 / 3.0) * derivative == pytest.approx(inverse(qfun(cubic, x, H)), rel=1e-5)

    def test_chart_interpolates_quadrature(self, asymptotics, cubic):
        chart = asymptotics.turning_point_chart(cubic, H)
        x1, _, _, x4 = boundary_abscissae(cubic)
        for x in (x1 + 0.01, chart.x0 - 0.2, chart.x0 + 0.05, x4 - 0.01):
            assert float(chart.xi(x)) == pytest.approx(langer_xi(cubic, x, H, x0=chart.x0), rel=1e-6, abs=1e-8)

    def test_chart_outside_window(self, asymptotics, cubic):
        chart = asymptotics.turning_point_chart(cubic, H)
        with pytest.raises(ValueError):
            chart.xi(chart.x_hi + 1.0)

    def test_weight_is_finite_at_turning_point(self, asymptotics, cubic):
        chart = asymptotics.turning_point_chart(cubic, H)
        weight = float(chart.weight_A(chart.x0))
        assert math.isfinite(weight)
        assert weight == pytest.approx(chart.slope_x0 ** -0.5)
        assert chart.uses_fallback(chart.x0)

    def test_chart_must_contain_turning_point(self, cubic):
        x0 = turning_point(cubic, H)
        with pytest.raises(RegimeError):
            build_turning_point_chart(cubic, H, x0 + 0.1, x0 + 0.5)


class TestRegionChart:

    def test_small_coupling_is_admissible(self, asymptotics, cubic):
        chart = asymptotics.region_chart(cubic, 0.005)
        assert chart.ordered
        assert chart.valid
        assert chart.h == pytest.approx(0.005 ** (1.0 / cubic.delta))
        assert chart.to_dict()['N3'] == chart.N3

    def test_large_coupling_reports_admissible_limit(self, asymptotics, cubic):
        with pytest.raises(RegimeError) as excinfo:
            asymptotics.region_chart(cubic, 0.5)
        limit = excinfo.value.details['maximal_admissible_lambda']
        assert 0.001 < limit < 0.5
        assert asymptotics.region_chart(cubic, limit).valid

    def test_rejects_non_positive_coupling(self, asymptotics, cubic):
        with pytest.raises(RegimeError):
            asymptotics.region_chart(cubic, 0.0)


class TestWindowChecks:

    @pytest.fixture(scope='class')
    def chart_and_solution(self, asymptotics, recurrence, cubic):
        chart = asymptotics.region_chart(cubic, 0.005)
        u = recurrence.recessive(cubic, 0.005, 0.5j, N=chart.N4 + 1)
        return chart, u

    def test_riccati_tail(self, asymptotics, cubic, chart_and_solution):
        chart, u = chart_and_solution
        assert asymptotics.riccati_tail_check(cubic, chart, u) <= 1.0 / 3.0

    def test_turan_window(self, asymptotics, cubic, chart_and_solution):
        chart, u = chart_and_solution
        bound = asymptotics.turan_window_check(cubic, chart, u)
        assert math.isfinite(bound)
        assert bound >= cubic.a(max(chart.N0, 1))

    def test_approximations(self, asymptotics, cubic, chart_and_solution):
        chart, _ = chart_and_solution
        approx = asymptotics.approx_solutions(cubic, 0.005, 0.5j, chart)
        assert approx.n[0] == chart.N1
        assert approx.n[-1] == chart.N4
        for values in (approx.psi_r, approx.psi_d, approx.w_r):
            assert np.all(np.isfinite(values))
        assert np.all(approx.psi_r <= approx.w_r + 1e-300)


class TestDiagnostics:

    def test_turning_point_error_shrinks_with_h(self, asymptotics, cubic):
        report = asymptotics.turning_point_error(cubic, [0.01, 0.001], 0.5j)
        assert len(report.rows) == 2
        assert all(row.match_residual < 1e-10 for row in report.rows)
        assert report.rows[1].sup_error < report.rows[0].sup_error
        assert report.slope > 0

    def test_bound_profile(self, asymptotics, quartic):
        rows = asymptotics.bound_diagnostic(quartic, 1j, [0.05, 0.02], [5, 20])
        assert [row.lam for row in rows] == [0.05, 0.02]
        for row in rows:
            assert 0 < row.sup_r[20] <= row.sup_r[5] < math.inf
            assert row.x0 is not None
            assert row.r[0] == 0.0
        assert max(row.sup_r[5] for row in rows) / min(row.sup_r[5] for row in rows) < 10.0

    def test_bound_saturates_on_harmonic_grid(self, asymptotics, quartic):
        grid = [1.0 / (10 * j) for j in range(1, 41)]
        rows = asymptotics.bound_diagnostic(quartic, 1j, grid, [5, 20, 50])
        for n0 in (5, 20, 50):
            values = [row.sup_r[n0] for row in rows]
            assert max(values) / min(values) < 20.0
        assert all(1.6 <= row.argmax_scaled <= 2.4 for row in rows)

    def test_turning_profile_is_matched_at_tail_boundary(self, asymptotics, cubic):
        report = asymptotics.turning_point_error(cubic, [0.005], 0.5j)
        chart = asymptotics.region_chart(cubic, 0.005)
        profile = report.rows[0].profile
        assert profile.u_abs.size == chart.N4 + 1
        assert profile.psi_r[chart.N3] == pytest.approx(profile.u_abs[chart.N3], rel=1e-9)
        assert np.all(np.isnan(profile.psi_r[:chart.N1]))
        assert np.all(profile.psi_r[chart.N1:] <= profile.w_r[chart.N1:] * (1 + 1e-12))
        rows = profile.csv_rows()
        assert rows[0][2] is None and rows[0][3] is None
        assert rows[chart.N3][0] == chart.N3
        assert rows[chart.N3][4] == pytest.approx(profile.r[chart.N3])

    def test_bound_profile_without_admissible_chart(self, asymptotics, quartic):
        row = asymptotics.bound_diagnostic(quartic, 1j, [0.05], [5])[0]
        np.testing.assert_array_equal(row.profile.r, row.r)
        assert len(row.profile.csv_rows()) == row.r.size

    def test_bound_window(self, asymptotics, quartic):
        with pytest.raises(RegimeError):
            asymptotics.bound_diagnostic(quartic, 1j, [0.05], [10 ** 7])
