import numpy as np
import pytest

from streampod import TimeGrid


def random_spd(rng, m, cond=10.0):
    """SPD matrix with eigenvalues spread over [1, cond]."""
    Q, _ = np.linalg.qr(rng.standard_normal((m, m)))
    return (Q * np.geomspace(1.0, cond, m)) @ Q.T


def random_instance(rng, m, s, cond=10.0):
    M = random_spd(rng, m, cond)
    M = 0.5 * (M + M.T)
    U = rng.standard_normal((m, s))
    deltas = rng.uniform(0.0, 1.0, s)
    deltas[deltas == 0.0] = 0.5
    return U, M, TimeGrid.from_steps(deltas)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
