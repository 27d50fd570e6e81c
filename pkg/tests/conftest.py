"""
Shared fixtures: Weyl systems are built once per session
"""

import numpy as np
import pytest

from app.core.groups import build_finite_weyl, build_planar_weyl


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def finite_systems():
    """Z_N x Z_N systems for N = 2..5"""
    return {n: build_finite_weyl(n) for n in (2, 3, 4, 5)}


@pytest.fixture(scope="session")
def planar_default():
    """Default grid: M=40, L=6, h=0.1"""
    return build_planar_weyl(40, 6.0, 0.1)


@pytest.fixture(scope="session")
def planar_wide():
    """Coarse wide window where Gaussian tails are far below double precision"""
    return build_planar_weyl(12, 10.0, 0.2)


@pytest.fixture(scope="session")
def planar_small():
    """Cheap planar grid for structural tests"""
    return build_planar_weyl(12, 6.0, 0.2)
