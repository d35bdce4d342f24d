import numpy as np
import pytest

from geomdmr.linalg import normalize_to_correlation


def make_spd(rng, n, spread=1.0):
    """Random SPD matrix with eigenvalues bounded away from zero."""
    a = rng.normal(size=(n, n)) * spread
    return a @ a.T + n * np.eye(n)


def make_correlation(rng, n, spread=1.0):
    return normalize_to_correlation(make_spd(rng, n, spread))


@pytest.fixture
def rng():
    return np.random.default_rng(20240511)
