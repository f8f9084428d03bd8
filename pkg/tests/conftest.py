"""Shared fixtures for the unit tests."""

import numpy as np
import pytest

from laguerre_vcm.density import ExponentialDensity


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def exp4() -> ExponentialDensity:
    """Exponential design density with mean 0.25."""
    return ExponentialDensity(rate=4.0)
