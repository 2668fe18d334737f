"""
Demon qubit algebra

The demon is a qubit rho_D = [[p_g, F], [F*, p_e]] inside the Bloch ball.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ..config import config
from ..errors import NotPositive, ValidationError
from ..matrixcore import (
    ComplexMatrix,
    DensityMatrix,
    binary_entropy,
    qubit_eigenvalues,
)
from .well import WellConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DemonState:
    """Demon qubit: ground population p_g and complex coherence F."""
    p_g: float
    F: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "p_g", float(self.p_g))
        object.__setattr__(self, "F", complex(self.F))
        if not 0.0 <= self.p_g <= 1.0:
            raise ValidationError(
                f"p_g must lie in [0, 1], got {self.p_g}",
                invariant="0 <= p_g <= 1",
                violation=self.p_g,
            )
        excess = abs(self.F) ** 2 - self.p_g * self.p_e
        if excess > config.tolerances.psd:
            raise NotPositive(
                f"|F|^2 exceeds p_g p_e by {excess:.3e}; state leaves the Bloch ball",
                invariant="|F|^2 <= p_g p_e",
                violation=excess,
            )

    @property
    def p_e(self) -> float:
        return 1.0 - self.p_g

    def matrix(self) -> ComplexMatrix:
        return np.array([[self.p_g, self.F], [self.F.conjugate(), self.p_e]], dtype=complex)

    def density(self) -> DensityMatrix:
        return DensityMatrix(self.matrix())

    def eigenvalues(self) -> tuple[float, float]:
        return qubit_eigenvalues(self.p_g, self.F)

    def entropy(self) -> float:
        """S(rho_D) = H(lambda+), nats."""
        if self.F == 0:
            return binary_entropy(self.p_g)
        return binary_entropy(self.eigenvalues()[0])

    def bloch_vector(self) -> tuple[float, float, float]:
        """(x, y, z) with rho = (I + x X + y Y + z Z) / 2."""
        return 2.0 * self.F.real, -2.0 * self.F.imag, 2.0 * self.p_g - 1.0

    def flipped(self) -> "DemonState":
        """X rho X: populations swapped, coherence conjugated."""
        return DemonState(self.p_e, self.F.conjugate())

    def to_dict(self) -> dict:
        return {"p_g": self.p_g, "p_e": self.p_e, "F_re": self.F.real, "F_im": self.F.imag}


def demon_from_bloch(x: float, y: float, z: float) -> DemonState:
    """Demon with Bloch vector (x, y, z); |r| <= 1 required."""
    norm_sq = x * x + y * y + z * z
    if norm_sq > 1.0 + config.tolerances.psd:
        raise NotPositive(
            f"Bloch vector norm^2 {norm_sq:.6g} exceeds 1",
            invariant="x^2 + y^2 + z^2 <= 1",
            violation=norm_sq - 1.0,
        )
    return DemonState(0.5 * (1.0 + z), complex(0.5 * x, -0.5 * y))


def thermal_demon(cfg: WellConfig, coherence_factor: float, phase: float = 0.0) -> DemonState:
    """
    Demon with thermal populations at T_D and scaled coherence.

    Args:
        cfg: Supplies delta, T_D and k_b
        coherence_factor: |F| / sqrt(p_g p_e), in [0, 1]; 1 gives a pure state
        phase: arg F in radians
    """
    if not 0.0 <= coherence_factor <= 1.0:
        raise ValidationError(
            f"coherence_factor must lie in [0, 1], got {coherence_factor}",
            invariant="0 <= coherence_factor <= 1",
            violation=float(coherence_factor),
        )
    p_g = float(expit(cfg.delta / (cfg.k_b * cfg.T_D)))
    magnitude = coherence_factor * math.sqrt(p_g * (1.0 - p_g))
    return DemonState(p_g, magnitude * complex(math.cos(phase), math.sin(phase)))


def demon_temperature(d: DemonState, delta: float, k_b: float | None = None) -> float:
    """
    Temperature whose Gibbs populations match the demon's diagonal.

    Infinite for p_g = p_e, negative for an inverted demon.
    """
    k_b = config.units.k_b if k_b is None else k_b
    if d.p_g == d.p_e:
        return math.inf
    if d.p_e == 0.0:
        return 0.0
    return delta / (k_b * math.log(d.p_g / d.p_e))


def demon_coherence(d: DemonState) -> float:
    """C_r = H(p_g) - H(lambda+)."""
    return max(binary_entropy(d.p_g) - d.entropy(), 0.0)


def final_demon(d: DemonState, P_L: float, P_R: float | None = None) -> DemonState:
    """
    Demon after the cycle: P_L rho + P_R X rho X.

    The coherence mixes as F P_L + F* P_R, so its phase matters.
    """
    if P_R is None:
        P_R = 1.0 - P_L
    p_g = d.p_g * P_L + d.p_e * P_R
    F = d.F * P_L + d.F.conjugate() * P_R
    return DemonState(min(max(p_g, 0.0), 1.0), F)
