import numpy as np
import pytest

from levyreduction.errors import (
    DimensionMismatch, EmptySpectrum, IndexOutOfRange, InvalidSpectrum, InvalidState,
    NonHermitianInput, ZeroProbabilityBranch,
)
from levyreduction.quantum_core import (
    DensityMatrix, EnergySpectrum, PureState, check_density_batch, energy_moments,
    expectation_energy, level_probabilities, luders_state, projector_probability,
    spectrum_from_dense, third_central_moment, trace_distance, variance_energy,
)


def diag_state(*p):
    return DensityMatrix(np.diag(p).astype(complex))


class TestSpectrum:
    def test_diagonal_with_degeneracy(self):
        spec = spectrum_from_dense(np.diag([0.0, 0.0, 2.0]), degeneracy_tol=1e-9)
        np.testing.assert_allclose(spec.eigenvalues, [0.0, 2.0])
        np.testing.assert_allclose(spec.projectors[0], np.diag([1, 1, 0]), atol=1e-12)
        np.testing.assert_allclose(spec.projectors[1], np.diag([0, 0, 1]), atol=1e-12)

    def test_multiple_of_identity(self):
        spec = spectrum_from_dense(5.0 * np.eye(3))
        np.testing.assert_allclose(spec.eigenvalues, [5.0])
        np.testing.assert_allclose(spec.projectors[0], np.eye(3), atol=1e-12)

    def test_pauli_x(self):
        spec = spectrum_from_dense(np.array([[0.0, 1.0], [1.0, 0.0]]))
        np.testing.assert_allclose(spec.eigenvalues, [-1.0, 1.0], atol=1e-12)
        np.testing.assert_allclose(spec.projectors[0], 0.5 * np.array([[1, -1], [-1, 1]]), atol=1e-12)
        np.testing.assert_allclose(spec.projectors[1], 0.5 * np.array([[1, 1], [1, 1]]), atol=1e-12)

    def test_rejects_non_hermitian(self):
        with pytest.raises(NonHermitianInput):
            spectrum_from_dense(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_rejects_empty(self):
        with pytest.raises(EmptySpectrum):
            spectrum_from_dense(np.zeros((0, 0)))

    def test_projector_validation(self):
        with pytest.raises(InvalidSpectrum):
            EnergySpectrum(np.array([0.0, 1.0]), np.array([np.eye(2), np.eye(2)]))

    def test_hamiltonian_reconstructed(self):
        H = np.array([[1.0, 0.5j], [-0.5j, 2.0]])
        spec = spectrum_from_dense(H)
        np.testing.assert_allclose(spec.hamiltonian(), H, atol=1e-12)
        assert not spec.is_diagonal

    def test_ranks(self):
        spec = EnergySpectrum.diagonal([0.0, 1.0], multiplicities=[2, 1])
        assert spec.dim == 3 and list(spec.ranks) == [2, 1]


class TestStates:
    def test_density_rejects_bad_trace(self):
        with pytest.raises(InvalidState):
            DensityMatrix(np.diag([0.5, 0.6]))

    def test_density_rejects_negative(self):
        with pytest.raises(InvalidState):
            DensityMatrix(np.diag([1.2, -0.2]))

    def test_tiny_negative_eigenvalue_clamped(self):
        rho = DensityMatrix(np.diag([1.0 + 5e-11, -5e-11]))
        assert np.linalg.eigvalsh(rho.matrix).min() >= 0

    def test_pure_state_norm(self):
        with pytest.raises(InvalidState):
            PureState([1.0, 1.0])
        psi = PureState.from_amplitudes([1.0, 1.0])
        assert psi.density().purity() == pytest.approx(1.0)

    def test_maximally_mixed_purity(self):
        assert DensityMatrix.maximally_mixed(4).purity() == pytest.approx(0.25)


class TestMoments:
    def test_expectation(self):
        spec = EnergySpectrum.diagonal([0.0, 2.0])
        assert expectation_energy(diag_state(0.5, 0.5), spec) == pytest.approx(1.0)
        spec = EnergySpectrum.diagonal([0.0, 1.0])
        assert expectation_energy(diag_state(0.3, 0.7), spec) == pytest.approx(0.7)
        assert expectation_energy(diag_state(1.0, 0.0), spec) == pytest.approx(0.0)

    def test_variance(self):
        assert variance_energy(diag_state(0.5, 0.5), EnergySpectrum.diagonal([0.0, 2.0])) == pytest.approx(1.0)
        three = EnergySpectrum.diagonal([0.0, 1.0, 2.0])
        assert variance_energy(diag_state(1 / 3, 1 / 3, 1 / 3), three) == pytest.approx(2 / 3)
        assert variance_energy(diag_state(0.0, 1.0), EnergySpectrum.diagonal([0.0, 1.0])) == 0.0

    def test_third_moment(self):
        spec = EnergySpectrum.diagonal([0.0, 1.0])
        assert third_central_moment(diag_state(0.25, 0.75), spec) == pytest.approx(-0.09375)
        assert third_central_moment(diag_state(0.5, 0.5), EnergySpectrum.diagonal([0.0, 2.0])) == pytest.approx(0.0)
        assert third_central_moment(diag_state(0.0, 1.0), spec) == pytest.approx(0.0)

    def test_energy_moments_agree(self):
        mean, var = energy_moments([0.2, 0.3, 0.5], [0.0, 1.0, 3.0])
        assert mean == pytest.approx(1.8) and var == pytest.approx(0.3 + 4.5 - 1.8 ** 2)

    def test_projector_probability(self):
        spec = EnergySpectrum.diagonal([0.0, 1.0])
        assert projector_probability(diag_state(1.0, 0.0), spec, 0) == pytest.approx(1.0)
        assert projector_probability(diag_state(0.3, 0.7), spec, 1) == pytest.approx(0.7)
        four = EnergySpectrum.diagonal([0.0, 1.0, 2.0], multiplicities=[2, 1, 1])
        assert projector_probability(DensityMatrix.maximally_mixed(4), four, 0) == pytest.approx(0.5)
        with pytest.raises(IndexOutOfRange):
            projector_probability(diag_state(0.3, 0.7), spec, 2)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            level_probabilities(diag_state(0.3, 0.7), EnergySpectrum.diagonal([0.0, 1.0, 2.0]))


class TestLuders:
    def test_eigenstate_unchanged(self):
        spec = EnergySpectrum.diagonal([0.0, 1.0])
        rho = diag_state(0.0, 1.0)
        np.testing.assert_allclose(luders_state(rho, spec, 1).matrix, rho.matrix)

    def test_pure_superposition(self):
        spec = EnergySpectrum.diagonal([0.0, 1.0])
        psi = PureState(np.array([1.0, 1.0]) / np.sqrt(2))
        np.testing.assert_allclose(luders_state(psi, spec, 0).matrix, np.diag([1.0, 0.0]), atol=1e-15)

    def test_degenerate_projection(self):
        spec = EnergySpectrum.diagonal([0.0, 1.0], multiplicities=[2, 1])
        out = luders_state(DensityMatrix.maximally_mixed(3), spec, 0)
        np.testing.assert_allclose(out.matrix, np.diag([0.5, 0.5, 0.0]), atol=1e-15)

    def test_zero_branch(self):
        with pytest.raises(ZeroProbabilityBranch):
            luders_state(diag_state(1.0, 0.0), EnergySpectrum.diagonal([0.0, 1.0]), 1)


def test_trace_distance_of_orthogonal_states():
    assert trace_distance(diag_state(1.0, 0.0), diag_state(0.0, 1.0)) == pytest.approx(1.0)


def test_check_density_batch_flags_problems():
    good = np.stack([np.diag([0.3, 0.7]), np.diag([1.0, 0.0])]).astype(complex)
    assert check_density_batch(good)["ok"]
    bad = good.copy()
    bad[0, 0, 0] = 0.5
    rep = check_density_batch(bad)
    assert not rep["ok"] and rep["trace_error"] == pytest.approx(0.2)
