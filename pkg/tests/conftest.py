import numpy as np
import pytest

from rbfkrylov.tensor_core import Operator6


def random_operator(shape, seed, scale=1.0) -> Operator6:
    rng = np.random.default_rng(seed)
    t = shape[0] * shape[1] * shape[2]
    return Operator6(scale * rng.standard_normal((t, t)), shape)


def random_tensor(shape, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.standard_normal(shape)


def well_conditioned_operator(shape, seed) -> Operator6:
    """Identity plus a small random perturbation: safely invertible."""
    rng = np.random.default_rng(seed)
    t = shape[0] * shape[1] * shape[2]
    return Operator6(np.eye(t) + 0.1 * rng.standard_normal((t, t)), shape)


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)
