import warnings

import numpy as np
import pytest

from mctsqaoa import models


@pytest.fixture(scope="session")
def ising1d_small():
    return models.build(models.ModelSpec(kind="ising1d", num_spins=4, total_duration=5.0))


@pytest.fixture(scope="session")
def ising1d_n8():
    return models.build(models.ModelSpec(kind="ising1d", num_spins=8, total_duration=50.0))


@pytest.fixture(scope="session")
def lmg_small():
    # A2 and A3 vanish identically for a single spin; restrict the pool.
    return models.build(
        models.ModelSpec(
            kind="lmg",
            num_spins=1,
            total_duration=1.5707963267948966,
            pool_subset=("H1", "H2", "A1"),
        )
    )


@pytest.fixture(scope="session")
def lmg_n100():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return models.build(models.ModelSpec(kind="lmg", num_spins=100, total_duration=500.0))


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (a + a.conj().T) / 2


def random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return psi / np.linalg.norm(psi)
