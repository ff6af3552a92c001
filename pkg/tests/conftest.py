import numpy as np
import pytest

from athermal.core import DensityMatrix, Hamiltonian


def random_density(rng: np.random.Generator, dim: int) -> DensityMatrix:
    """Haar-ish random mixed state from a Ginibre matrix."""
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = a @ a.conj().T
    return DensityMatrix(m / np.trace(m).real)


def random_hamiltonian(rng: np.random.Generator, dim: int,
                       e_max: float = 4.0) -> Hamiltonian:
    """Random diagonal Hamiltonian with strictly positive energies."""
    energies = np.sort(rng.uniform(0.05, e_max, size=dim))
    return Hamiltonian(tuple(energies))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
