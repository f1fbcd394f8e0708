"""Shared fixtures: the default material and the standard bath specs."""

import numpy as np
import pytest

from dephlab import (MaterialParams, WeylBackend, discretize_19,
                     quadrature_bath, subset_rescaled)

DEFAULT_TEMPERATURE = 34.0


@pytest.fixture(scope="session")
def material():
    return MaterialParams()


@pytest.fixture(scope="session")
def grid19(material):
    return discretize_19(material, DEFAULT_TEMPERATURE)


@pytest.fixture(scope="session")
def k1_bath(grid19):
    return subset_rescaled(grid19, [1])


@pytest.fixture(scope="session")
def k1_weyl(k1_bath):
    return WeylBackend(k1_bath.as_ref())


@pytest.fixture(scope="session")
def continuum_bath(material):
    return quadrature_bath(material, DEFAULT_TEMPERATURE)


@pytest.fixture(scope="session")
def continuum_weyl(continuum_bath):
    return WeylBackend(continuum_bath.as_ref())


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
