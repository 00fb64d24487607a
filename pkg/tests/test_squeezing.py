"""Tests for the squeezing operator, truncated and extension dynamics, and Wigner functions."""

import math

import numpy as np
import pytest

from services.spectral_service import ExtensionParam
from services.squeezing_service import (
    FockVector,
    SqueezingService,
    assemble_full,
    block_size,
    evolve_truncated,
    interleave_blocks,
    wigner,
)


class TestOperatorAssembly:

    @pytest.mark.parametrize('k, hpow, K', [(3, 3, 0.0), (3, 3, 0.7), (4, 3, 0.2), (5, 4, 1.3)])
    def test_blocks_reassemble_full_matrix(self, k, hpow, K):
        N = 60
        np.testing.assert_allclose(interleave_blocks(k, hpow, K, N), assemble_full(k, hpow, K, N),
                                   rtol=1e-12, atol=1e-9)

    def test_full_matrix_entries(self):
        matrix = assemble_full(3, 3, 0.5, 10)
        assert matrix[3, 0] == pytest.approx(math.sqrt(6.0))
        assert matrix[0, 3] == matrix[3, 0]
        assert matrix[2, 2] == pytest.approx(0.5 * 8)
        np.testing.assert_array_equal(matrix, matrix.T)

    def test_block_sizes(self):
        assert [block_size(3, m, 10) for m in range(3)] == [4, 3, 3]
        assert block_size(3, 2, 2) == 0


class TestTruncatedEvolution:

    def test_unitary_and_energy_conserving(self, cubic):
        N, lam = 80, 0.3
        state = evolve_truncated(cubic, lam, 0.8, N)
        assert state.norm() == pytest.approx(1.0, abs=1e-10)
        a = cubic.a_values(N - 1)
        J = np.diag(lam * cubic.f_values(N)) + np.diag(a, 1) + np.diag(a, -1)
        energy = np.vdot(state.coeffs, J @ state.coeffs)
        assert abs(energy) < 1e-9

    def test_zero_time_is_identity(self, cubic):
        state = evolve_truncated(cubic, 0.1, 0.0, 20)
        np.testing.assert_allclose(state.coeffs, np.eye(20)[0], atol=1e-12)

    def test_block_labels(self, cubic):
        state = evolve_truncated(cubic, 0.1, 0.5, 12)
        assert state.k == 3
        assert state.residue == 0

    def test_rejects_tiny_truncation(self, cubic):
        with pytest.raises(ValueError):
            evolve_truncated(cubic, 0.1, 1.0, 1)


class TestFockVector:

    def test_to_fock_spreads_block(self):
        block = FockVector(coeffs=np.array([1.0, 2.0, 3.0], dtype=complex), k=3, residue=1)
        full = block.to_fock()
        np.testing.assert_array_equal(full.coeffs, [0, 1, 0, 0, 2, 0, 0, 3])
        assert full.residue is None
        assert full.to_fock() is full

    def test_padded(self):
        vector = FockVector(coeffs=np.array([1.0, 1j]))
        np.testing.assert_array_equal(vector.padded(4), [1.0, 1j, 0, 0])
        assert vector.padded(1).size == 2

    def test_fidelity(self):
        a = FockVector(coeffs=np.array([1.0, 0.0]))
        b = FockVector(coeffs=np.array([0.0, 2.0, 0.0]))
        assert SqueezingService.fidelity(a, a) == pytest.approx(1.0)
        assert SqueezingService.fidelity(a, b) == 0.0
        c = FockVector(coeffs=np.array([1.0, 1j]) / math.sqrt(2.0))
        assert SqueezingService.fidelity(a, c) == pytest.approx(1.0 / math.sqrt(2.0))


class TestWigner:

    def test_vacuum(self):
        grid = wigner(FockVector(coeffs=np.array([1.0 + 0j])), extent=4.0, points=41)
        X, P = np.meshgrid(grid.x, grid.p, indexing='ij')
        np.testing.assert_allclose(grid.values, np.exp(-X ** 2 - P ** 2) / math.pi, atol=1e-8)

    def test_first_excited_state_is_negative_at_origin(self):
        grid = wigner(FockVector(coeffs=np.array([0.0, 1.0], dtype=complex)), extent=5.0, points=101)
        centre = grid.values[50, 50]
        assert centre == pytest.approx(-1.0 / math.pi, rel=1e-10)

    def test_normalization_and_marginal(self):
        coeffs = np.array([1.0, 0.5j, 0.0, -0.3]) / math.sqrt(1.0 + 0.25 + 0.09)
        grid = wigner(FockVector(coeffs=coeffs), extent=6.0, points=121)
        assert grid.integral() == pytest.approx(1.0, rel=1e-2)
        assert np.all(grid.position_marginal() > -1e-10)

    def test_block_state_is_spread_before_rendering(self):
        block = FockVector(coeffs=np.array([0.0, 1.0], dtype=complex), k=3, residue=0)
        grid = wigner(block, extent=4.0, points=41)
        reference = wigner(FockVector(coeffs=np.eye(4, dtype=complex)[3]), extent=4.0, points=41)
        np.testing.assert_allclose(grid.values, reference.values, atol=1e-12)


class TestExtensionDynamics:

    def test_default_energy_is_zero_for_infinity(self, squeezing, cubic):
        assert abs(squeezing.default_energy(cubic, ExtensionParam.infinity())) < 1e-8

    def test_extension_evolution_is_complete(self, squeezing, cubic):
        state = squeezing.extension_evolve(cubic, ExtensionParam.infinity(), 0.5)
        assert state.defect < squeezing.completeness_tol
        assert state.vector.norm() == pytest.approx(1.0, abs=2e-2)
        assert np.all(state.weights > 0)

    def test_parity_selects_the_limit(self, squeezing):
        rows = squeezing.parity_limits(3, 3, 1.0, [40, 41, 80, 81])
        for row in rows:
            if row.parity == 'odd':
                assert row.distance_tinf < row.distance_t0
            else:
                assert row.distance_t0 < row.distance_tinf
        assert rows[3].distance_tinf < rows[1].distance_tinf

    def test_direct_sum_keeps_empty_blocks(self, squeezing):
        result = squeezing.extension_direct_sum(3, 3, [ExtensionParam.infinity()] * 3, 0.5, 30)
        assert result.coeffs.size == 30
        np.testing.assert_array_equal(result.coeffs[1::3], 0)
        np.testing.assert_array_equal(result.coeffs[2::3], 0)
        assert np.any(result.coeffs[0::3] != 0)

    def test_direct_sum_needs_one_parameter_per_block(self, squeezing):
        with pytest.raises(ValueError):
            squeezing.extension_direct_sum(3, 3, [ExtensionParam(0.0)], 0.5, 30)

    def test_vacuum_experiment(self, squeezing):
        experiment = squeezing.vacuum_experiment(3, 3, ExtensionParam.infinity(), 0.5, 2)
        assert abs(experiment.energy) < 1e-8
        assert [row.j for row in experiment.rows] == [1, 2]
        for row in experiment.rows:
            assert 0.0 < row.fidelity <= 1.0 + 1e-12
            assert row.K == pytest.approx(3 ** (1.5 - 3) * row.lam)
        assert experiment.final_state.norm() == pytest.approx(1.0, abs=1e-9)


class TestVacuumConvergence:

    @pytest.fixture(scope='class')
    def experiments(self, squeezing):
        towards_inf = squeezing.vacuum_experiment(3, 3, ExtensionParam.infinity(), 1.0, 6)
        towards_zero = squeezing.vacuum_experiment(3, 3, ExtensionParam(0.0), 1.0, 6)
        return towards_inf, towards_zero

    def test_fidelity_reaches_limit_within_six_couplings(self, experiments):
        towards_inf, _ = experiments
        fidelities = [row.fidelity for row in towards_inf.rows]
        assert len(fidelities) == 6
        assert max(fidelities) >= 0.95

    def test_different_extensions_give_different_states(self, experiments):
        towards_inf, towards_zero = experiments
        assert SqueezingService.fidelity(towards_inf.final_state, towards_zero.final_state) <= 0.8
