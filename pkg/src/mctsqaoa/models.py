"""The three spin models: 1D Ising, 2D Ising, and LMG.

Each builder assembles the target Hamiltonian H = H1 + H2, the initial
product state, the exact ground state, and the gate-generator pool
{H1, H2, A1, A2, A3} where the A_i are the leading terms of the adiabatic
gauge potential for the model.  Pool generators are rescaled to unit spectral
norm (J = 1 sets the unit of energy and inverse time); the target Hamiltonian
itself stays unnormalized.  An optional identity action is realized as the
zero Hamiltonian appended to the pool.

Single-site operators X, Y, Z are spin-1/2 matrices (half the Pauli
matrices).  This is what makes the stated couplings sit at the intended
physics: hz/J = 0.4523, hx/J = 0.4045 is the near-critical nonintegrable
point of the Ising chain, and the LMG transition lands at h/J = 1.

1D and 2D Ising use periodic boundaries and the full 2^N space (N <= 12).
The LMG model conserves total spin, so it is built directly in the
(N+1)-dimensional maximal-spin sector with collective spin matrices,
which keeps N = 100 cheap.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .hilbert import HermitianOperator, QuantumState, spectral_decompose, zero_operator

MAX_ISING_SPINS = 12
MAX_LMG_SPINS = 10000
POOL_LABELS = ("H1", "H2", "A1", "A2", "A3")
IDENTITY_LABEL = "ID"

DEFAULT_COUPLINGS: dict[str, dict[str, float]] = {
    "ising1d": {"hz": 0.4523, "hx": 0.4045},
    "ising2d": {"hz": 2.0, "hx": 3.0},
    "lmg": {"h": 0.9},
}

_SPIN_X = np.array([[0, 0.5], [0.5, 0]], dtype=np.complex128)
_SPIN_Y = np.array([[0, -0.5j], [0.5j, 0]], dtype=np.complex128)
_SPIN_Z = np.array([[0.5, 0], [0, -0.5]], dtype=np.complex128)


class UnsupportedSize(ValueError):
    """Requested system size exceeds the dense-simulation guard."""


@dataclass(frozen=True)
class ModelSpec:
    """Declarative description of a model instance.

    ``num_spins`` is the spin count for ising1d/lmg and a (rows, cols) pair
    for ising2d.  ``couplings`` overrides the per-kind defaults (J is fixed
    to 1).  ``pool_subset`` restricts the generator pool to the named labels,
    keeping their canonical order; it exists for small exhaustive-search
    setups and leaves the default five-operator pool untouched when None.
    """

    kind: str
    num_spins: int | tuple[int, int]
    total_duration: float
    couplings: Mapping[str, float] | None = None
    include_identity: bool = False
    pool_subset: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in DEFAULT_COUPLINGS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.total_duration <= 0:
            raise ValueError("total_duration must be positive")
        if self.couplings is not None:
            allowed = set(DEFAULT_COUPLINGS[self.kind])
            extra = set(self.couplings) - allowed
            if extra:
                raise ValueError(
                    f"couplings {sorted(extra)} not valid for {self.kind}; expected subset of {sorted(allowed)}"
                )
        if self.pool_subset is not None:
            bad = set(self.pool_subset) - set(POOL_LABELS)
            if bad:
                raise ValueError(f"unknown pool labels {sorted(bad)}")
            if len(self.pool_subset) < 2:
                raise ValueError("pool_subset needs at least two generators")

    def resolved_couplings(self) -> dict[str, float]:
        out = dict(DEFAULT_COUPLINGS[self.kind])
        if self.couplings:
            out.update({k: float(v) for k, v in self.couplings.items()})
        return out

    def spin_count(self) -> int:
        if self.kind == "ising2d":
            rows, cols = self.num_spins  # type: ignore[misc]
            return int(rows) * int(cols)
        return int(self.num_spins)  # type: ignore[arg-type]


@dataclass(frozen=True)
class ModelInstance:
    """A built model: pool, target, reference states and energies."""

    spec: ModelSpec
    pool: tuple[HermitianOperator, ...]
    pool_labels: tuple[str, ...]
    target: HermitianOperator
    init_state: QuantumState
    ground_energy: float
    ground_state: QuantumState
    dim: int
    num_spins: int

    identity_indices: tuple[int, ...] = field(default=())

    @property
    def pool_size(self) -> int:
        return len(self.pool)

    @property
    def total_duration(self) -> float:
        return self.spec.total_duration


def _site_operator(op: np.ndarray, site: int, n: int) -> np.ndarray:
    mat = np.array([[1.0 + 0j]])
    for j in range(n):
        mat = np.kron(mat, op if j == site else np.eye(2, dtype=np.complex128))
    return mat


def _sum_single(op: np.ndarray, n: int) -> np.ndarray:
    dim = 2**n
    total = np.zeros((dim, dim), dtype=np.complex128)
    for i in range(n):
        total += _site_operator(op, i, n)
    return total


def _sum_bond(op_a: np.ndarray, op_b: np.ndarray, bonds: list[tuple[int, int]], n: int) -> np.ndarray:
    dim = 2**n
    total = np.zeros((dim, dim), dtype=np.complex128)
    for i, j in bonds:
        total += _site_operator(op_a, i, n) @ _site_operator(op_b, j, n)
    return total


def _chain_bonds(n: int) -> list[tuple[int, int]]:
    # Literal periodic sum over i of (i, i+1); for n = 2 both bonds coincide
    # and the pair is counted twice, matching the small-ring convention.
    return [(i, (i + 1) % n) for i in range(n)]


def _grid_bonds(rows: int, cols: int) -> list[tuple[int, int]]:
    # Periodic square lattice; right and down neighbor of every site.  Wrap
    # bonds on a length-2 direction coincide pairwise, as in the 1D ring.
    def idx(r: int, c: int) -> int:
        return r * cols + c

    bonds: list[tuple[int, int]] = []
    for r in range(rows):
        for c in range(cols):
            if cols > 1:
                bonds.append((idx(r, c), idx(r, (c + 1) % cols)))
            if rows > 1:
                bonds.append((idx(r, c), idx((r + 1) % rows, c)))
    return bonds


def _collective_spin_matrices(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """S_x, S_y, S_z for total spin S = n/2 on the (n+1)-dim Dicke ladder.

    Basis index k corresponds to magnetization m = S - k, so index 0 is the
    all-up state.
    """
    s = n / 2.0
    m = s - np.arange(n + 1)
    sz = np.diag(m.astype(np.complex128))
    # <m+1|S+|m> = sqrt(S(S+1) - m(m+1)); raising moves k -> k-1.
    raise_amp = np.sqrt(s * (s + 1) - m[1:] * (m[1:] + 1))
    sp = np.zeros((n + 1, n + 1), dtype=np.complex128)
    sp[np.arange(n), np.arange(1, n + 1)] = raise_amp
    sm = sp.conj().T
    sx = (sp + sm) / 2.0
    sy = (sp - sm) / 2.0j
    return sx, sy, sz


def _basis_state(dim: int, index: int) -> QuantumState:
    amps = np.zeros(dim, dtype=np.complex128)
    amps[index] = 1.0
    return QuantumState(amps)


def _raw_generators(spec: ModelSpec) -> tuple[dict[str, np.ndarray], np.ndarray, QuantumState, int]:
    """Unnormalized H1, H2, A1..A3, plus target, initial state and dim."""
    c = spec.resolved_couplings()
    kind = spec.kind
    if kind == "ising1d":
        n = spec.spin_count()
        if not 2 <= n <= MAX_ISING_SPINS:
            raise UnsupportedSize(f"ising1d supports 2..{MAX_ISING_SPINS} spins, got {n}")
        bonds = _chain_bonds(n)
        h1 = _sum_bond(_SPIN_Z, _SPIN_Z, bonds, n) + c["hz"] * _sum_single(_SPIN_Z, n)
        h2 = c["hx"] * _sum_single(_SPIN_X, n)
        a1 = _sum_single(_SPIN_Y, n)
        a2 = _sum_bond(_SPIN_X, _SPIN_Y, bonds, n) + _sum_bond(_SPIN_Y, _SPIN_X, bonds, n)
        a3 = _sum_bond(_SPIN_Z, _SPIN_Y, bonds, n) + _sum_bond(_SPIN_Y, _SPIN_Z, bonds, n)
        dim = 2**n
        init = _basis_state(dim, 0)  # all spins up in the Z basis
    elif kind == "ising2d":
        rows, cols = spec.num_spins  # type: ignore[misc]
        n = int(rows) * int(cols)
        if not 2 <= n <= MAX_ISING_SPINS:
            raise UnsupportedSize(f"ising2d supports 2..{MAX_ISING_SPINS} spins, got {rows}x{cols}")
        bonds = _grid_bonds(int(rows), int(cols))
        h1 = _sum_bond(_SPIN_Z, _SPIN_Z, bonds, n) + c["hz"] * _sum_single(_SPIN_Z, n)
        h2 = c["hx"] * _sum_single(_SPIN_X, n)
        a1 = _sum_single(_SPIN_Y, n)
        a2 = _sum_bond(_SPIN_X, _SPIN_Y, bonds, n) + _sum_bond(_SPIN_Y, _SPIN_X, bonds, n)
        a3 = _sum_bond(_SPIN_Z, _SPIN_Y, bonds, n) + _sum_bond(_SPIN_Y, _SPIN_Z, bonds, n)
        dim = 2**n
        init = _basis_state(dim, 0)
    elif kind == "lmg":
        n = spec.spin_count()
        if not 1 <= n <= MAX_LMG_SPINS:
            raise UnsupportedSize(f"lmg supports 1..{MAX_LMG_SPINS} spins, got {n}")
        sx, sy, sz = _collective_spin_matrices(n)
        dim = n + 1
        eye = np.eye(dim, dtype=np.complex128)
        # Collective identities for spin-1/2 sites: sum_j X_j = S_x and
        # sum_j (Z_j + 1/2) = S_z + N/2 on the maximal-spin ladder.
        sum_x = sx
        sum_y = sy
        sum_zh = sz + (n / 2.0) * eye
        h1 = -(1.0 / n) * (sum_x @ sum_x)
        h2 = c["h"] * sum_zh
        a1 = sum_y
        a2 = (sum_y @ sum_x + sum_x @ sum_y) / n
        a3 = (sum_y @ sum_zh + sum_zh @ sum_y) / n
        # Minimal-S_z Dicke state (all spins down): the ground state of the
        # field term H2 and of the model in the large-field limit.
        init = _basis_state(dim, dim - 1)
    else:  # pragma: no cover - guarded by ModelSpec
        raise ValueError(kind)
    target = h1 + h2
    ops = {"H1": h1, "H2": h2, "A1": a1, "A2": a2, "A3": a3}
    return ops, target, init, dim


def build(spec: ModelSpec) -> ModelInstance:
    """Assemble a model: normalized pool, target spectrum, reference states."""
    ops, target_mat, init, dim = _raw_generators(spec)
    labels = list(spec.pool_subset) if spec.pool_subset is not None else list(POOL_LABELS)
    # Canonical label order regardless of subset order.
    labels.sort(key=POOL_LABELS.index)

    pool: list[HermitianOperator] = []
    for label in labels:
        raw = spectral_decompose(ops[label])
        if raw.op_norm <= 0:
            raise ValueError(f"pool generator {label} is identically zero and cannot be normalized")
        # Rescaling by a positive constant keeps the eigenbasis and ordering.
        pool.append(
            HermitianOperator(
                matrix=raw.matrix / raw.op_norm,
                eigenvalues=raw.eigenvalues / raw.op_norm,
                eigenvectors=raw.eigenvectors,
                op_norm=1.0,
            )
        )

    identity_indices: tuple[int, ...] = ()
    if spec.include_identity:
        pool.append(zero_operator(dim))
        labels.append(IDENTITY_LABEL)
        identity_indices = (len(pool) - 1,)

    target = spectral_decompose(target_mat)
    gap = target.eigenvalues[1] - target.eigenvalues[0] if dim > 1 else np.inf
    if gap < 1e-10 * max(1.0, target.op_norm):
        warnings.warn(
            f"degenerate ground space (gap {gap:.3e}); using the lowest-index eigenvector",
            RuntimeWarning,
            stacklevel=2,
        )
    ground_energy = float(target.eigenvalues[0])
    ground_state = QuantumState(target.eigenvectors[:, 0])

    return ModelInstance(
        spec=spec,
        pool=tuple(pool),
        pool_labels=tuple(labels),
        target=target,
        init_state=init,
        ground_energy=ground_energy,
        ground_state=ground_state,
        dim=dim,
        num_spins=spec.spin_count(),
        identity_indices=identity_indices,
    )


def build_ising_1d(spec: ModelSpec) -> ModelInstance:
    if spec.kind != "ising1d":
        raise ValueError(f"expected kind 'ising1d', got {spec.kind!r}")
    return build(spec)


def build_ising_2d(spec: ModelSpec) -> ModelInstance:
    if spec.kind != "ising2d":
        raise ValueError(f"expected kind 'ising2d', got {spec.kind!r}")
    return build(spec)


def build_lmg(spec: ModelSpec) -> ModelInstance:
    if spec.kind != "lmg":
        raise ValueError(f"expected kind 'lmg', got {spec.kind!r}")
    return build(spec)


def sequence_count(pool_size: int, q: int) -> int:
    """Number of length-q gate sequences with no adjacent repeats."""
    if pool_size < 2:
        raise ValueError("pool_size must be at least 2")
    if q < 1:
        raise ValueError("q must be at least 1")
    return pool_size * (pool_size - 1) ** (q - 1)
