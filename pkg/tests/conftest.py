import numpy as np
import pytest

from privsvm import Dataset, PrivilegedSet, KernelSpec, LINEAR, GAUSSIAN_RBF


def random_dataset(rng, n, d=2, x_scale=1.0):
    """Random two-class dataset with at least one point per class."""
    X = rng.normal(0.0, x_scale, size=(n, d))
    y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    if np.all(y == y[0]):
        y[int(rng.integers(n))] *= -1.0
    return Dataset(X, y)


def random_privileged(rng, n, d=2):
    return PrivilegedSet(rng.normal(0.0, 1.0, size=(n, d)))


def random_kernel(rng):
    if rng.random() < 0.5:
        return KernelSpec(LINEAR)
    return KernelSpec(GAUSSIAN_RBF, float(rng.uniform(0.5, 2.0)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
