import warnings

import numpy as np
import pytest

from mctsqaoa import hilbert, models
from mctsqaoa.models import ModelSpec, UnsupportedSize, build, sequence_count


def bit_sz(state: int, site: int) -> float:
    """Spin-z value of a site in a computational basis state (bit 0 = up)."""
    return 0.5 if (state >> site) & 1 == 0 else -0.5


def assemble_ising_oracle(n: int, bonds, hz: float, hx: float) -> np.ndarray:
    """Independent dense assembly via basis-state bit arithmetic.

    Diagonal from ZZ and Z terms; X flips contribute hx/2 on bit-flip pairs.
    Site i maps to bit (n-1-i) in the kron ordering used by the builders.
    """
    dim = 2**n
    h = np.zeros((dim, dim), dtype=complex)
    for s in range(dim):
        diag = 0.0
        for i, j in bonds:
            diag += bit_sz(s, n - 1 - i) * bit_sz(s, n - 1 - j)
        for i in range(n):
            diag += hz * bit_sz(s, n - 1 - i)
        h[s, s] = diag
        for i in range(n):
            h[s ^ (1 << (n - 1 - i)), s] += hx * 0.5
    return h


class TestIsing1D:
    def test_n8_shape_and_pool(self, ising1d_n8):
        m = ising1d_n8
        assert m.dim == 256
        assert m.pool_labels == ("H1", "H2", "A1", "A2", "A3")
        for op in m.pool:
            assert abs(op.op_norm - 1.0) < 1e-10

    def test_n2_classical_ring(self):
        # Both bonds of the 2-site periodic ring coincide, so the coupling
        # doubles: target = 2J Sz Sz with spectrum {-J/2, +J/2}.
        spec = ModelSpec(
            kind="ising1d",
            num_spins=2,
            total_duration=1.0,
            couplings={"hx": 0.0, "hz": 0.0},
            pool_subset=("H1", "A1"),
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            m = build(spec)
        sz = np.diag([0.5, -0.5])
        expected = 2.0 * np.kron(sz, sz)
        assert np.max(np.abs(m.target.matrix - expected)) < 1e-12
        assert abs(m.ground_energy - (-0.5)) < 1e-12

    def test_n8_ground_energy_oracle(self, ising1d_n8):
        bonds = [(i, (i + 1) % 8) for i in range(8)]
        oracle = assemble_ising_oracle(8, bonds, hz=0.4523, hx=0.4045)
        e_gs = np.linalg.eigvalsh(oracle)[0]
        assert abs(ising1d_n8.ground_energy - e_gs) < 1e-9

    def test_size_guard(self):
        with pytest.raises(UnsupportedSize):
            build(ModelSpec(kind="ising1d", num_spins=13, total_duration=1.0))

    def test_hermiticity(self, ising1d_n8):
        for op in list(ising1d_n8.pool) + [ising1d_n8.target]:
            assert np.max(np.abs(op.matrix - op.matrix.conj().T)) <= 1e-12

    def test_init_state_energy_above_ground(self, ising1d_n8):
        m = ising1d_n8
        e0 = hilbert.expectation(m.init_state, m.target)
        assert e0 >= m.ground_energy
        assert e0 / m.ground_energy < 1.0


class TestIsing2D:
    def test_3x3_shape(self):
        m = build(ModelSpec(kind="ising2d", num_spins=(3, 3), total_duration=50.0))
        assert m.dim == 512
        assert len(m.pool) == 5
        for op in m.pool:
            assert abs(op.op_norm - 1.0) < 1e-10
        assert m.num_spins == 9

    def test_2x2_classical_limit(self):
        spec = ModelSpec(
            kind="ising2d",
            num_spins=(2, 2),
            total_duration=1.0,
            couplings={"hx": 0.0, "hz": 0.0},
            pool_subset=("H1", "A1"),
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            m = build(spec)
        off_diag = m.target.matrix - np.diag(np.diag(m.target.matrix))
        assert np.max(np.abs(off_diag)) < 1e-12
        # Brute force over the 16 classical configurations with the same
        # literal periodic bond enumeration (wrap bonds doubled on length-2).
        bonds = []
        for r in range(2):
            for c in range(2):
                bonds.append((r * 2 + c, r * 2 + (c + 1) % 2))
                bonds.append((r * 2 + c, ((r + 1) % 2) * 2 + c))
        best = min(
            sum(bit_sz(s, 3 - i) * bit_sz(s, 3 - j) for i, j in bonds) for s in range(16)
        )
        assert abs(m.ground_energy - best) < 1e-12

    def test_3x3_ground_energy_oracle(self):
        m = build(ModelSpec(kind="ising2d", num_spins=(3, 3), total_duration=1.0))
        bonds = []
        for r in range(3):
            for c in range(3):
                bonds.append((r * 3 + c, r * 3 + (c + 1) % 3))
                bonds.append((r * 3 + c, ((r + 1) % 3) * 3 + c))
        oracle = assemble_ising_oracle(9, bonds, hz=2.0, hx=3.0)
        e_gs = np.linalg.eigvalsh(oracle)[0]
        assert abs(m.ground_energy - e_gs) < 1e-9

    def test_size_guard(self):
        with pytest.raises(UnsupportedSize):
            build(ModelSpec(kind="ising2d", num_spins=(4, 4), total_duration=1.0))


class TestLMG:
    def test_n100_dimension(self, lmg_n100):
        assert lmg_n100.dim == 101
        assert lmg_n100.num_spins == 100
        assert len(lmg_n100.pool) == 5

    def test_n1_hand_spectrum(self, lmg_small):
        # H1 = -J X^2 = -J/4 * I for a single spin; H2 = h (Z + 1/2) has
        # eigenvalues {0, h}.  Spectrum: {-J/4, -J/4 + h} with h = 0.9.
        vals = lmg_small.target.eigenvalues
        assert np.allclose(vals, [-0.25, 0.65], atol=1e-12)
        assert abs(lmg_small.ground_energy + 0.25) < 1e-12

    def test_n100_ground_energy_second_assembly(self, lmg_n100):
        # Second, independent collective-operator assembly: basis ordered by
        # ascending magnetization, ladder matrices from the explicit
        # sqrt((S-m)(S+m+1)) amplitudes.
        n = 100
        s = n / 2
        m_vals = np.arange(-s, s + 1)  # ascending
        dim = n + 1
        sp = np.zeros((dim, dim))
        for k, m in enumerate(m_vals[:-1]):
            sp[k + 1, k] = np.sqrt((s - m) * (s + m + 1))
        sx = (sp + sp.T) / 2
        sz = np.diag(m_vals)
        h = -(1 / n) * (sx @ sx) + 0.9 * (sz + (n / 2) * np.eye(dim))
        e_gs = np.linalg.eigvalsh(h)[0]
        assert abs(lmg_n100.ground_energy - e_gs) < 1e-9

    @pytest.mark.parametrize("n", [2, 4, 6, 8])
    def test_collective_matches_full_space(self, n):
        """Collective-sector energies agree with the full 2^n construction."""
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            m = build(ModelSpec(kind="lmg", num_spins=n, total_duration=1.0))
        sx1 = np.array([[0, 0.5], [0.5, 0]], dtype=complex)
        sy1 = np.array([[0, -0.5j], [0.5j, 0]], dtype=complex)
        sz1 = np.array([[0.5, 0], [0, -0.5]], dtype=complex)

        def lift(op, i):
            out = np.array([[1.0 + 0j]])
            for j in range(n):
                out = np.kron(out, op if j == i else np.eye(2))
            return out

        sum_x = sum(lift(sx1, i) for i in range(n))
        sum_y = sum(lift(sy1, i) for i in range(n))
        sum_zh = sum(lift(sz1, i) for i in range(n)) + (n / 2) * np.eye(2**n)
        full = {
            "H1": -(1 / n) * (sum_x @ sum_x),
            "H2": 0.9 * sum_zh,
            "A1": sum_y,
            "A2": (sum_y @ sum_x + sum_x @ sum_y) / n,
            "A3": (sum_y @ sum_zh + sum_zh @ sum_y) / n,
        }
        target_full = full["H1"] + full["H2"]
        assert abs(m.ground_energy - np.linalg.eigvalsh(target_full)[0]) < 1e-9
        # matched states: all-down product state is the last basis vector
        down = np.zeros(2**n, dtype=complex)
        down[-1] = 1.0
        e_init_full = np.vdot(down, target_full @ down).real
        assert abs(hilbert.expectation(m.init_state, m.target) - e_init_full) < 1e-9
        # pool operator expectations on the initial state match too
        for label, op in zip(m.pool_labels, m.pool):
            raw = full[label]
            norm = np.max(np.abs(np.linalg.eigvalsh(raw)))
            e_full = np.vdot(down, (raw / norm) @ down).real
            assert abs(hilbert.expectation(m.init_state, op) - e_full) < 1e-9

    def test_size_guard(self):
        with pytest.raises(UnsupportedSize):
            build(ModelSpec(kind="lmg", num_spins=10001, total_duration=1.0))

    def test_init_ratio_below_one(self, lmg_n100):
        e0 = hilbert.expectation(lmg_n100.init_state, lmg_n100.target)
        assert e0 / lmg_n100.ground_energy < 1.0


class TestIdentityAction:
    def test_identity_pool_member(self):
        m = build(ModelSpec(kind="ising1d", num_spins=4, total_duration=5.0, include_identity=True))
        assert len(m.pool) == 6
        assert m.pool_labels[-1] == "ID"
        ident = m.pool[-1]
        assert ident.op_norm == 0.0
        assert np.max(np.abs(ident.matrix)) == 0.0
        psi = m.init_state
        assert np.array_equal(hilbert.evolve(psi, ident, 3.7).amplitudes, psi.amplitudes)

    def test_non_identity_members_still_normalized(self):
        m = build(ModelSpec(kind="ising1d", num_spins=4, total_duration=5.0, include_identity=True))
        for op, label in zip(m.pool, m.pool_labels):
            if label != "ID":
                assert abs(op.op_norm - 1.0) < 1e-10


class TestSequenceCount:
    def test_paper_scale(self):
        assert sequence_count(5, 8) == 81920

    def test_single_gate(self):
        assert sequence_count(5, 1) == 5

    def test_small_by_hand(self):
        assert sequence_count(3, 4) == 24

    def test_rejects_tiny_pool(self):
        with pytest.raises(ValueError):
            sequence_count(1, 4)


class TestModelSpec:
    def test_rejects_unknown_couplings(self):
        with pytest.raises(ValueError):
            ModelSpec(kind="lmg", num_spins=10, total_duration=1.0, couplings={"hx": 1.0})

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            ModelSpec(kind="heisenberg", num_spins=4, total_duration=1.0)

    def test_rejects_bad_subset(self):
        with pytest.raises(ValueError):
            ModelSpec(kind="ising1d", num_spins=4, total_duration=1.0, pool_subset=("H1", "XX"))
