"""
Small constructors shared by the test modules
"""

import numpy as np

from app.core.operators import random_density
from app.core.quantization import QuantizationKernel


def random_kernel(dim: int, rng: np.random.Generator) -> QuantizationKernel:
    return QuantizationKernel(random_density(dim, rng))


def basis_vector(dim: int, level: int = 0) -> np.ndarray:
    v = np.zeros(dim, dtype=np.complex128)
    v[level] = 1.0
    return v
