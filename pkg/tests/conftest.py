"""
Shared fixtures.
"""

import numpy as np
import pytest

from coherent_szilard.matrixcore import DensityMatrix
from coherent_szilard.szilard import WellConfig


@pytest.fixture
def reference_well() -> WellConfig:
    """T = 1, T_D = 0.5, delta = 0.5: the reference engine."""
    return WellConfig(L=1.0, l=0.5, T=1.0, T_D=0.5, delta=0.5)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def make_density():
    """Factory for random full-rank density matrices."""

    def make(d: int, rng: np.random.Generator) -> DensityMatrix:
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        rho = g @ g.conj().T
        rho = rho / np.trace(rho).real
        return DensityMatrix(0.5 * (rho + rho.conj().T))

    return make
