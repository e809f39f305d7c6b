"""Terminal reward -E/N for complete gate protocols, with noise channels.

The reward is only defined for full length-q protocols; neither the tree
search nor the duration solver can observe intermediate states.  Three noise
channels mimic experimental conditions:

* ``gaussian``       adds eps ~ Normal(0, gamma^2) to the energy per spin,
* ``quantum``        adds eps ~ Normal(0, dE^2) with dE the quantum energy
                     fluctuation sqrt(<H^2> - <H>^2)/N of the final state,
* ``gate_rotation``  perturbs every duration multiplicatively,
                     alpha -> alpha*(1 + eps), eps ~ Normal(0, delta^2),
                     without renormalizing the total duration.

``RewardEvaluator`` owns per-sequence transfer-matrix caches so that batches
of duration vectors for a fixed sequence cost one complex matmul per gate,
and counts every objective evaluation for budget accounting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import hilbert
from .hilbert import QuantumState
from .models import ModelInstance

NOISE_KINDS = ("none", "gaussian", "quantum", "gate_rotation")
DURATION_SUM_TOL = 1e-9


class InvalidSequence(ValueError):
    """Gate sequence violates the pool range or no-repeat constraint."""


class DegenerateGround(ZeroDivisionError):
    """Energy ratio undefined: |E_GS| below tolerance."""


@dataclass(frozen=True)
class GateSequence:
    """Indices into the generator pool; consecutive entries must differ."""

    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        idx = tuple(int(i) for i in self.indices)
        if len(idx) < 1:
            raise InvalidSequence("sequence must contain at least one gate")
        if any(i < 0 for i in idx):
            raise InvalidSequence("gate indices must be nonnegative")
        for a, b in zip(idx, idx[1:]):
            if a == b:
                raise InvalidSequence(f"consecutive gates repeat at value {a}")
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def as_text(self) -> str:
        return "-".join(str(i) for i in self.indices)

    @classmethod
    def from_text(cls, text: str) -> "GateSequence":
        return cls(tuple(int(p) for p in text.split("-")))


@dataclass(frozen=True)
class Durations:
    """Per-gate durations in units of 1/J; the policy keeps their sum at T."""

    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if vals.ndim != 1:
            raise ValueError("durations must be a vector")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ValueError("durations must be finite and nonnegative")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "none"
    gamma: float = 0.0
    delta: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if self.gamma < 0 or self.delta < 0:
            raise ValueError("noise strengths must be nonnegative")
        if self.gamma > 0 and self.kind != "gaussian":
            raise ValueError("gamma is only meaningful for gaussian noise")
        if self.delta > 0 and self.kind != "gate_rotation":
            raise ValueError("delta is only meaningful for gate_rotation noise")


@dataclass(frozen=True)
class RewardSample:
    """One reward draw; the exact energy is exposed on the noiseless path only."""

    value: float
    exact_energy_per_spin: float | None = None


def _check_lengths(model: ModelInstance, seq: GateSequence, dur: Durations) -> None:
    if len(seq) != len(dur):
        raise InvalidSequence(f"sequence length {len(seq)} != durations length {len(dur)}")
    if any(i >= model.pool_size for i in seq):
        raise InvalidSequence(f"gate index out of range for pool of size {model.pool_size}")


def _check_budget(model: ModelInstance, dur: Durations) -> None:
    total = float(np.sum(dur.values))
    if abs(total - model.total_duration) > DURATION_SUM_TOL:
        raise ValueError(
            f"durations sum {total!r} deviates from total duration {model.total_duration!r}"
        )
    if np.any(dur.values > model.total_duration + DURATION_SUM_TOL):
        raise ValueError("individual durations must not exceed the total duration")


def run_protocol(model: ModelInstance, seq: GateSequence, dur: Durations) -> QuantumState:
    """Apply the gate product to the initial state, first gate first.

    Pure simulator entry point: durations may be any nonnegative reals.  The
    fixed-budget constraint (sum equal to the model's total duration) is
    enforced on the reward paths that optimizers consume.
    """
    _check_lengths(model, seq, dur)
    state = model.init_state
    for gate, alpha in zip(seq, dur.values):
        state = hilbert.evolve(state, model.pool[gate], float(alpha))
    return state


def energy_ratio(model: ModelInstance, value_per_spin: float) -> float:
    """E/E_GS for a reward value -E/N; 1 means exact ground-state preparation."""
    if abs(model.ground_energy) < 1e-12:
        raise DegenerateGround("ground energy is numerically zero")
    energy = -value_per_spin * model.num_spins
    return energy / model.ground_energy


class _SequenceKernel:
    """Batched evolution for one fixed sequence.

    Works in the eigenbasis chain: coefficients start as V_1^dag psi_init,
    pick up phases exp(-i*alpha_j*lambda_j) per gate, and hop between bases
    through cached transfer matrices W = V_next^dag V_prev.  Energies come
    from the target conjugated into the final basis, so a batch of M
    duration vectors costs q matmuls of shape (d,d)x(d,M).
    """

    def __init__(self, model: ModelInstance, indices: tuple[int, ...], caches: dict):
        self._lams = [model.pool[k].eigenvalues for k in indices]
        first, last = indices[0], indices[-1]

        c0 = caches["c0"]
        if first not in c0:
            vecs = model.pool[first].eigenvectors
            c0[first] = vecs.conj().T @ model.init_state.amplitudes
        self._c0 = c0[first]

        w = caches["w"]
        self._transfers = []
        for prev, nxt in zip(indices, indices[1:]):
            key = (nxt, prev)
            if key not in w:
                w[key] = model.pool[nxt].eigenvectors.conj().T @ model.pool[prev].eigenvectors
            self._transfers.append(w[key])

        ht = caches["ht"]
        if last not in ht:
            vecs = model.pool[last].eigenvectors
            ht[last] = vecs.conj().T @ model.target.matrix @ vecs
        self._target = ht[last]

    def final_coefficients(self, alphas: np.ndarray) -> np.ndarray:
        """(d, M) final-state coefficients in the last gate's eigenbasis."""
        coeffs = np.repeat(self._c0[:, None], alphas.shape[0], axis=1)
        q = len(self._lams)
        for j in range(q):
            coeffs = coeffs * np.exp(-1j * np.outer(self._lams[j], alphas[:, j]))
            if j < q - 1:
                coeffs = self._transfers[j] @ coeffs
        return coeffs

    def energies(self, alphas: np.ndarray, with_variance: bool = False):
        coeffs = self.final_coefficients(alphas)
        h_coeffs = self._target @ coeffs
        energies = np.einsum("dm,dm->m", coeffs.conj(), h_coeffs).real
        if not with_variance:
            return energies
        second = np.einsum("dm,dm->m", h_coeffs.conj(), h_coeffs).real
        variances = np.maximum(second - energies**2, 0.0)
        return energies, variances


class RewardEvaluator:
    """Counts and serves reward evaluations for a model under one noise setting.

    Each objective evaluation (one energy computation for one complete
    protocol) increments ``count`` by one, matching the budget unit used to
    compare optimizers.
    """

    def __init__(self, model: ModelInstance, noise: NoiseModel | None = None):
        self.model = model
        self.noise = noise or NoiseModel()
        self.count = 0
        self._caches: dict = {"c0": {}, "w": {}, "ht": {}}
        self._kernels: dict[tuple[int, ...], _SequenceKernel] = {}

    def _kernel(self, indices: tuple[int, ...]) -> _SequenceKernel:
        kern = self._kernels.get(indices)
        if kern is None:
            kern = _SequenceKernel(self.model, indices, self._caches)
            self._kernels[indices] = kern
        return kern

    def _check_batch(self, seq: GateSequence, alphas: np.ndarray) -> None:
        if alphas.ndim != 2 or alphas.shape[1] != len(seq):
            raise InvalidSequence(
                f"duration batch shape {alphas.shape} incompatible with sequence length {len(seq)}"
            )
        if any(i >= self.model.pool_size for i in seq):
            raise InvalidSequence(f"gate index out of range for pool of size {self.model.pool_size}")
        total = self.model.total_duration
        sums = alphas.sum(axis=1)
        if np.any(np.abs(sums - total) > DURATION_SUM_TOL) or np.any(alphas < 0):
            raise ValueError("every duration row must be nonnegative and sum to the total duration")

    def evaluate_batch(
        self, seq: GateSequence, alphas: np.ndarray, rng: np.random.Generator
    ) -> np.ndarray:
        """Rewards -E/N for a batch of duration rows under the configured noise."""
        alphas = np.asarray(alphas, dtype=np.float64)
        self._check_batch(seq, alphas)
        m = alphas.shape[0]
        self.count += m
        n = self.model.num_spins
        kern = self._kernel(seq.indices)
        kind = self.noise.kind

        if kind == "gate_rotation":
            eps = rng.normal(0.0, self.noise.delta, size=alphas.shape)
            energies = kern.energies(alphas * (1.0 + eps))
            return -energies / n
        if kind == "quantum":
            energies, variances = kern.energies(alphas, with_variance=True)
            values = -energies / n
            fluct = np.sqrt(variances) / n
            return values + rng.standard_normal(m) * fluct
        energies = kern.energies(alphas)
        values = -energies / n
        if kind == "gaussian":
            values = values + rng.normal(0.0, self.noise.gamma, size=m)
        return values

    def evaluate(self, seq: GateSequence, dur: Durations, rng: np.random.Generator) -> RewardSample:
        """One reward draw for one protocol (counts as one evaluation)."""
        _check_lengths(self.model, seq, dur)
        _check_budget(self.model, dur)
        value = float(self.evaluate_batch(seq, dur.values[None, :], rng)[0])
        if self.noise.kind == "none":
            return RewardSample(value=value, exact_energy_per_spin=-value)
        return RewardSample(value=value)

    def exact_ratio(self, seq: GateSequence, dur: Durations) -> float:
        """Noiseless energy ratio of a protocol (counts as one evaluation).

        Used only when reporting protocols that the optimizers found.
        """
        _check_lengths(self.model, seq, dur)
        _check_budget(self.model, dur)
        self.count += 1
        kern = self._kernel(seq.indices)
        energy = float(kern.energies(dur.values[None, :])[0])
        return energy_ratio(self.model, -energy / self.model.num_spins)


def evaluate(
    model: ModelInstance,
    seq: GateSequence,
    dur: Durations,
    noise: NoiseModel,
    rng: np.random.Generator,
) -> RewardSample:
    """One-shot reward evaluation; prefer RewardEvaluator for repeated calls."""
    return RewardEvaluator(model, noise).evaluate(seq, dur, rng)
