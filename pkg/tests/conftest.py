import numpy as np
import pytest

from ppk import fock, model, superop


def random_liouvillian(rng, dim, n_jumps=1):
    """Random trace-preserving generator: Hermitian H plus Gaussian jump ops."""
    r = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = 0.5 * (r + r.conj().T)
    jumps = []
    for _ in range(n_jumps):
        c = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        jumps.append((c, float(rng.uniform(0.5, 1.5))))
    return superop.liouvillian(h, jumps), h, jumps


def random_density_matrix(rng, dim):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = m @ m.conj().T
    return rho / np.trace(rho).real


@pytest.fixture(scope="session")
def desk_stats():
    """Shared desk-scale statistics at (g=1, delta=0, u=1, dim=25)."""
    from ppk import fcs
    params = model.ModelParams(delta=0.0, g=1.0, u=1.0)
    return fcs.CurrentStatistics(params, dim=25, adaptive=False)


def assert_density_matrix(rho):
    fock.check_density_matrix(rho)
