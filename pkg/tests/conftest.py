import numpy as np
import pytest

from hillkdv import TrigPotential


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(170081)


def random_potential(rng, n_modes=8, norm=0.5, decay=0.6):
    """Seeded random zero-mean trig polynomial with the given L2 norm."""
    from hillkdv import sobolev_norm

    n = np.arange(1, n_modes + 1, dtype=float)
    raw = (rng.standard_normal(n_modes) + 1j * rng.standard_normal(n_modes))
    psi = TrigPotential(raw * np.exp(-decay * n))
    return psi.scaled(norm / sobolev_norm(psi, 0.0))


def grid_quadrature(f, m=20001):
    """Independent oracle: trapezoid quadrature of f over one period."""
    x = np.linspace(0.0, 1.0, m)
    return np.trapezoid(f(x), x)
