"""Dense complex state vectors and Hermitian operators.

Operators carry their spectral decomposition so that time evolution
``exp(-i*t*H)`` costs one basis change per gate instead of a fresh matrix
exponential.  All arrays are complex128; instances are immutable and safe to
share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITICITY_TOL = 1e-12
STATE_NORM_TOL = 1e-10


class DimensionMismatch(ValueError):
    """Operator and state dimensions differ."""


class NotHermitian(ValueError):
    """Matrix is not Hermitian within tolerance."""


class DecompositionFailure(RuntimeError):
    """The eigensolver failed to converge."""


def _frozen_complex(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=np.complex128)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class QuantumState:
    """A normalized state vector.  Global phase is not meaningful."""

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = _frozen_complex(self.amplitudes)
        if amps.ndim != 1:
            raise ValueError(f"state must be a vector, got shape {amps.shape}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > STATE_NORM_TOL:
            raise ValueError(f"state norm {norm!r} deviates from 1 beyond {STATE_NORM_TOL}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]


@dataclass(frozen=True)
class HermitianOperator:
    """A Hermitian matrix with its eigendecomposition.

    ``eigenvalues`` are sorted ascending, ``eigenvectors`` holds the matching
    orthonormal eigenvectors as columns, and ``op_norm`` is the spectral norm
    max|eigenvalue|.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    op_norm: float

    def __post_init__(self) -> None:
        mat = _frozen_complex(self.matrix)
        vecs = _frozen_complex(self.eigenvectors)
        vals = np.ascontiguousarray(self.eigenvalues, dtype=np.float64)
        vals.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "eigenvectors", vecs)
        object.__setattr__(self, "eigenvalues", vals)
        object.__setattr__(self, "op_norm", float(self.op_norm))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def spectral_decompose(matrix: np.ndarray) -> HermitianOperator:
    """Diagonalize a Hermitian matrix.

    Raises NotHermitian if ``matrix`` deviates from its conjugate transpose by
    more than 1e-12 elementwise, and DecompositionFailure if the eigensolver
    does not converge.
    """
    mat = np.asarray(matrix, dtype=np.complex128)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {mat.shape}")
    asym = np.max(np.abs(mat - mat.conj().T)) if mat.size else 0.0
    if asym > HERMITICITY_TOL:
        raise NotHermitian(f"max |M - M^dag| = {asym:.3e} exceeds {HERMITICITY_TOL}")
    try:
        vals, vecs = np.linalg.eigh(mat)
    except np.linalg.LinAlgError as exc:
        raise DecompositionFailure(str(exc)) from exc
    return HermitianOperator(
        matrix=mat,
        eigenvalues=vals,
        eigenvectors=vecs,
        op_norm=float(np.max(np.abs(vals))) if vals.size else 0.0,
    )


def zero_operator(dim: int) -> HermitianOperator:
    """The zero Hamiltonian; its evolution is the exact identity map."""
    return HermitianOperator(
        matrix=np.zeros((dim, dim), dtype=np.complex128),
        eigenvalues=np.zeros(dim),
        eigenvectors=np.eye(dim, dtype=np.complex128),
        op_norm=0.0,
    )


def _check_dims(state: QuantumState, op: HermitianOperator) -> None:
    if state.dim != op.dim:
        raise DimensionMismatch(f"state dim {state.dim} != operator dim {op.dim}")


def evolve(state: QuantumState, op: HermitianOperator, duration: float) -> QuantumState:
    """Apply ``exp(-i*duration*H)`` to the state via the eigenbasis.

    Norm is preserved to machine precision.  ``duration`` may be any finite
    real; zero returns the input unchanged.
    """
    _check_dims(state, op)
    if not np.isfinite(duration):
        raise ValueError(f"duration must be finite, got {duration!r}")
    if duration == 0.0:
        return state
    phases = np.exp(-1j * duration * op.eigenvalues)
    coeffs = op.eigenvectors.conj().T @ state.amplitudes
    return QuantumState(op.eigenvectors @ (phases * coeffs))


def expectation(state: QuantumState, op: HermitianOperator) -> float:
    """Real expectation value <psi|H|psi>."""
    _check_dims(state, op)
    return float(np.vdot(state.amplitudes, op.matrix @ state.amplitudes).real)


def variance(state: QuantumState, op: HermitianOperator) -> float:
    """Energy fluctuation <H^2> - <H>^2, clamped at zero against rounding."""
    _check_dims(state, op)
    h_psi = op.matrix @ state.amplitudes
    mean = np.vdot(state.amplitudes, h_psi).real
    second = np.vdot(state.amplitudes, op.matrix @ h_psi).real
    return max(float(second - mean * mean), 0.0)
