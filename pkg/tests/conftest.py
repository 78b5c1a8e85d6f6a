import numpy as np
import pytest

from jcthermo.checks import VerifyContext
from jcthermo.jcdyn import ModelParams


@pytest.fixture(scope="session")
def ctx():
    """Shared cache of preset runs for the acceptance criteria."""
    return VerifyContext()


@pytest.fixture(scope="session")
def weak_params():
    return ModelParams(omega_b=0.6, g=0.03, beta_b=0.3, beta_a=1.1)


@pytest.fixture(scope="session")
def strong_params():
    return ModelParams(omega_b=0.6, g=0.3, beta_b=0.3, beta_a=1.1)


@pytest.fixture(scope="session")
def cold_params():
    return ModelParams(omega_b=0.99, g=0.3, beta_b=3.0)


def random_density(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    v = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = v @ v.conj().T
    return rho / rho.trace()


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
