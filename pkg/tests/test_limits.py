"""Tests for coupling roots, sequence selection, the m-function spiral and Green-function limits."""

import pytest

from services.errors import BracketError, HypothesisError
from services.spectral_service import ExtensionParam


class TestCouplingRoots:

    def test_recovers_known_coupling(self, limits, spectral, cubic):
        E, _ = spectral.stabilized_eigenvalue(cubic, 0.25, 0)
        root = limits.lambda_for_eigenvalue(cubic, E, 0, 0.5)
        assert root.lam == pytest.approx(0.25, rel=1e-8)
        assert root.bracket[0] <= root.lam <= root.bracket[1]
        assert root.residual < 1e-9

    def test_energy_above_the_curve(self, limits, cubic):
        with pytest.raises(BracketError):
            limits.lambda_for_eigenvalue(cubic, 1e6, 0, 0.5)

    def test_certify(self, limits, spectral, cubic):
        E, _ = spectral.stabilized_eigenvalue(cubic, 0.3, 1)
        certified, distance = limits.certify_eigenvalue(cubic, 0.3, E, 1e-8)
        assert certified
        assert distance < 1e-8
        certified, distance = limits.certify_eigenvalue(cubic, 0.3, E + 1e-3, 1e-8)
        assert not certified
        assert distance == pytest.approx(1e-3, rel=1e-3)


class TestSequenceSelection:

    @pytest.fixture(scope='class')
    def sequence(self, limits, cubic):
        return limits.select_sequence(cubic, ExtensionParam.infinity(), 0.0, 3)

    def test_couplings_halve_at_least(self, sequence):
        assert [element.j for element in sequence] == [1, 2, 3]
        assert sequence[0].lam < 0.5
        for element in sequence[1:]:
            assert element.ratio <= 0.5

    def test_zero_in_every_truncated_spectrum(self, sequence):
        assert all(element.certified for element in sequence)
        assert all(element.residual < 1e-9 for element in sequence)
        assert all(element.t_recomputed == 'inf' for element in sequence)

    def test_levels_do_not_decrease(self, sequence):
        levels = [element.level for element in sequence]
        assert levels == sorted(levels)

    def test_m_function_converges(self, sequence):
        errors = [element.m_error for element in sequence]
        assert all(error is not None for error in errors)
        assert errors[-1] < errors[0]

    def test_energy_must_belong_to_extension(self, limits, cubic):
        with pytest.raises(HypothesisError):
            limits.select_sequence(cubic, ExtensionParam(0.0), 0.0, 2)

    def test_rejects_empty_sequence(self, limits, cubic):
        with pytest.raises(ValueError):
            limits.select_sequence(cubic, ExtensionParam.infinity(), 0.0, 0)

    def test_green_function_limit(self, limits, cubic, sequence):
        lambdas = [element.lam for element in sequence]
        table = limits.green_convergence(cubic, lambdas, ExtensionParam.infinity(), 1j, [(0, 0), (0, 2)])
        assert len(table) == 2 * len(lambdas)
        diagonal = [row for row in table if (row.n, row.m) == (0, 0)]
        for row, element in zip(diagonal, sequence):
            assert row.error == pytest.approx(element.m_error, rel=1e-6, abs=1e-12)


class TestSpiral:

    def test_empty_grid(self, limits, cubic):
        with pytest.raises(HypothesisError):
            limits.spiral_samples(cubic, 1j, [])
        with pytest.raises(HypothesisError):
            limits.spiral_samples(cubic, 1j, [0.1, 0.0])

    def test_samples_approach_the_circle(self, limits, cubic):
        result = limits.spiral_samples(cubic, 1j, [1.0, 0.001], circle_samples=40)
        assert len(result.points) == 2
        assert all(point.m.imag > 0 for point in result.points)
        assert result.points[-1].circle_distance < result.points[0].circle_distance
        assert result.circle.radius > 0

    def test_spiral_closes_in_on_the_circle(self, limits, cubic):
        result = limits.spiral_samples(cubic, 1j, [1.0, 0.1, 0.01, 0.001])
        assert result.points[-1].circle_distance < 0.1 * result.points[0].circle_distance
        assert result.circle.max_deviation < 1e-6 * result.circle.radius

    def test_samples_pass_cross_checks(self, limits, cubic):
        result = limits.spiral_samples(cubic, 1j, [0.5, 0.05], circle_samples=40)
        assert result.circle.consistent
        assert all(point.consistent for point in result.points)
        assert all(point.resolvent_gap <= 1e-8 * max(1.0, abs(point.m)) for point in result.points)
        assert result.consistent
