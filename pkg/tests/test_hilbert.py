import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from mctsqaoa import hilbert
from mctsqaoa.hilbert import (
    DimensionMismatch,
    HermitianOperator,
    NotHermitian,
    QuantumState,
    evolve,
    expectation,
    spectral_decompose,
    variance,
    zero_operator,
)

from conftest import random_hermitian, random_state

PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PLUS = QuantumState(np.array([1, 1], dtype=complex) / np.sqrt(2))


class TestSpectralDecompose:
    def test_pauli_z_spectrum(self):
        op = spectral_decompose(PAULI_Z)
        assert np.allclose(op.eigenvalues, [-1.0, 1.0])
        assert op.op_norm == 1.0

    def test_identity_four(self):
        op = spectral_decompose(np.eye(4))
        assert np.allclose(op.eigenvalues, 1.0)
        assert np.allclose(op.eigenvectors, np.eye(4))

    def test_reconstruction_oracle(self):
        rng = np.random.default_rng(1)
        h = random_hermitian(8, rng)
        op = spectral_decompose(h)
        rebuilt = op.eigenvectors @ np.diag(op.eigenvalues) @ op.eigenvectors.conj().T
        assert np.max(np.abs(rebuilt - h)) < 1e-10

    def test_eigenvalues_sorted(self):
        rng = np.random.default_rng(2)
        op = spectral_decompose(random_hermitian(12, rng))
        assert np.all(np.diff(op.eigenvalues) >= 0)

    def test_rejects_non_hermitian(self):
        with pytest.raises(NotHermitian):
            spectral_decompose(np.array([[0, 1], [0, 0]], dtype=complex))

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            spectral_decompose(np.zeros((2, 3)))


class TestEvolve:
    def test_zero_duration_is_identity(self):
        rng = np.random.default_rng(3)
        op = spectral_decompose(random_hermitian(6, rng))
        psi = QuantumState(random_state(6, rng))
        out = evolve(psi, op, 0.0)
        assert np.max(np.abs(out.amplitudes - psi.amplitudes)) < 1e-14

    @pytest.mark.parametrize("alpha", [0.3, 1.1])
    def test_single_qubit_rotation(self, alpha):
        # exp(-i a Z)|+> rotates the Bloch vector in the XY plane: <X> = cos(2a).
        z = spectral_decompose(PAULI_Z)
        x = spectral_decompose(PAULI_X)
        out = evolve(PLUS, z, alpha)
        assert abs(expectation(out, x) - np.cos(2 * alpha)) < 1e-12

    def test_matches_expm_oracle(self):
        rng = np.random.default_rng(4)
        h = random_hermitian(16, rng)
        psi = random_state(16, rng)
        mine = evolve(QuantumState(psi), spectral_decompose(h), 0.7).amplitudes
        ref = expm(-1j * 0.7 * h) @ psi
        assert np.max(np.abs(mine - ref)) < 1e-8

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000), duration=st.floats(0.0, 20.0))
    def test_unitarity(self, seed, duration):
        rng = np.random.default_rng(seed)
        dim = int(rng.integers(2, 24))
        op = spectral_decompose(random_hermitian(dim, rng))
        psi = QuantumState(random_state(dim, rng))
        out = evolve(psi, op, duration)
        assert abs(np.linalg.norm(out.amplitudes) - 1.0) < 1e-10

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000), a=st.floats(0.0, 5.0), b=st.floats(0.0, 5.0))
    def test_composition(self, seed, a, b):
        rng = np.random.default_rng(seed)
        dim = int(rng.integers(2, 16))
        op = spectral_decompose(random_hermitian(dim, rng))
        psi = QuantumState(random_state(dim, rng))
        two_step = evolve(evolve(psi, op, a), op, b)
        one_step = evolve(psi, op, a + b)
        assert np.max(np.abs(two_step.amplitudes - one_step.amplitudes)) < 1e-10

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10_000), duration=st.floats(0.0, 10.0))
    def test_energy_conservation(self, seed, duration):
        rng = np.random.default_rng(seed)
        dim = int(rng.integers(2, 16))
        op = spectral_decompose(random_hermitian(dim, rng))
        psi = QuantumState(random_state(dim, rng))
        before = expectation(psi, op)
        after = expectation(evolve(psi, op, duration), op)
        assert abs(before - after) < 1e-10

    def test_dimension_mismatch(self):
        op = spectral_decompose(PAULI_Z)
        psi = QuantumState(np.array([1, 0, 0, 0], dtype=complex))
        with pytest.raises(DimensionMismatch):
            evolve(psi, op, 1.0)

    def test_rejects_non_finite_duration(self):
        with pytest.raises(ValueError):
            evolve(PLUS, spectral_decompose(PAULI_Z), np.inf)

    def test_zero_operator_evolution_is_exact_identity(self):
        op = zero_operator(4)
        psi = QuantumState(random_state(4, np.random.default_rng(5)))
        out = evolve(psi, op, 123.456)
        assert np.array_equal(out.amplitudes, psi.amplitudes)


class TestExpectation:
    def test_eigenstate_returns_eigenvalue(self):
        rng = np.random.default_rng(6)
        op = spectral_decompose(random_hermitian(8, rng))
        k = 3
        psi = QuantumState(op.eigenvectors[:, k])
        assert abs(expectation(psi, op) - op.eigenvalues[k]) < 1e-10

    def test_plus_state_z_is_zero(self):
        assert abs(expectation(PLUS, spectral_decompose(PAULI_Z))) < 1e-12

    def test_triple_product_oracle(self):
        rng = np.random.default_rng(7)
        h = random_hermitian(8, rng)
        psi = random_state(8, rng)
        # independent dense-arithmetic oracle: explicit double loop
        acc = 0.0 + 0.0j
        for i in range(8):
            for j in range(8):
                acc += np.conj(psi[i]) * h[i, j] * psi[j]
        assert abs(expectation(QuantumState(psi), spectral_decompose(h)) - acc.real) < 1e-10

    def test_within_spectral_range(self):
        rng = np.random.default_rng(8)
        op = spectral_decompose(random_hermitian(10, rng))
        for seed in range(5):
            psi = QuantumState(random_state(10, np.random.default_rng(seed)))
            val = expectation(psi, op)
            assert op.eigenvalues[0] - 1e-10 <= val <= op.eigenvalues[-1] + 1e-10


class TestVariance:
    def test_eigenstate_has_zero_variance(self):
        rng = np.random.default_rng(9)
        op = spectral_decompose(random_hermitian(8, rng))
        psi = QuantumState(op.eigenvectors[:, 0])
        assert variance(psi, op) < 1e-10

    def test_plus_state_z_is_one(self):
        assert abs(variance(PLUS, spectral_decompose(PAULI_Z)) - 1.0) < 1e-12

    def test_norm_identity_oracle(self):
        rng = np.random.default_rng(10)
        h = random_hermitian(8, rng)
        psi = random_state(8, rng)
        h_psi = h @ psi
        oracle = np.vdot(h_psi, h_psi).real - np.vdot(psi, h_psi).real ** 2
        assert abs(variance(QuantumState(psi), spectral_decompose(h)) - oracle) < 1e-10

    def test_nonnegative(self):
        rng = np.random.default_rng(11)
        op = spectral_decompose(random_hermitian(6, rng))
        for seed in range(10):
            psi = QuantumState(random_state(6, np.random.default_rng(100 + seed)))
            assert variance(psi, op) >= 0.0


class TestQuantumState:
    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            QuantumState(np.array([1.0, 1.0], dtype=complex))

    def test_immutable_amplitudes(self):
        psi = QuantumState(np.array([1.0, 0.0], dtype=complex))
        with pytest.raises(ValueError):
            psi.amplitudes[0] = 0.5
