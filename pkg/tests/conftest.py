import math

import numpy as np
import pytest

from catbox._qcore import DensityOperator, SpaceLabel, StateVector


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def _gaussian(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


@pytest.fixture
def make_state(rng):
    """Random normalized pure state over the given factors."""

    def make(*factors: SpaceLabel) -> StateVector:
        d = math.prod(f.dim for f in factors)
        return StateVector(factors, _gaussian(rng, d)).normalize()

    return make


@pytest.fixture
def make_density(rng):
    """Random full-rank density operator over the given factors."""

    def make(*factors: SpaceLabel) -> DensityOperator:
        d = math.prod(f.dim for f in factors)
        g = _gaussian(rng, d, d)
        m = g @ g.conj().T
        return DensityOperator(factors, m / np.trace(m).real)

    return make


@pytest.fixture
def make_hermitian(rng):
    def make(d: int) -> np.ndarray:
        a = _gaussian(rng, d, d)
        return (a + a.conj().T) / 2

    return make


@pytest.fixture
def spaces():
    return SpaceLabel("A", 2), SpaceLabel("B", 3), SpaceLabel("C", 2)
