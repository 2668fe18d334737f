"""
Dense Hermitian matrix kernel

Validated density matrices and probability vectors plus the handful of operations the
engine models need: spectra, entropies (nats), dephasing, relative entropy of coherence,
tensor products, partial traces, Haar-random unitaries and unitary conjugation.

Values are immutable after construction. Randomness always comes from an explicit
numpy Generator, never from global state.
"""

import logging
from dataclasses import dataclass
from typing import Literal, Optional, Union

import numpy as np
import numpy.typing as npt
import scipy.linalg
from scipy.special import entr, softmax

from .config import config
from .errors import (
    DimensionMismatch,
    InvalidSimplex,
    NoConvergence,
    NotHermitian,
    NotPositive,
    NotUnitary,
    TraceNotOne,
    ValidationError,
)

logger = logging.getLogger(__name__)

ComplexMatrix = npt.NDArray[np.complex128]

# Eigenvalues below this count as outside the support of a state
SUPPORT_CUTOFF = 1e-14


@dataclass(frozen=True)
class Tolerances:
    """Validation tolerances: hermiticity, trace, positivity, eigen-accuracy."""
    herm: float = 1e-10
    trace: float = 1e-10
    psd: float = 1e-9
    eig: float = 1e-12

    def __post_init__(self):
        for name in ("herm", "trace", "psd", "eig"):
            value = getattr(self, name)
            if not value > 0:
                raise ValidationError(
                    f"Tolerance {name} must be positive, got {value}",
                    invariant=f"tolerance.{name} > 0",
                    violation=float(value),
                )

    @classmethod
    def default(cls) -> "Tolerances":
        """Tolerances from the global config."""
        t = config.tolerances
        return cls(herm=t.herm, trace=t.trace, psd=t.psd, eig=t.eig)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class ProbabilityVector:
    """A point of the probability simplex. Build with `probability_vector()`."""
    p: npt.NDArray[np.float64]

    def __post_init__(self):
        object.__setattr__(self, "p", _frozen(np.asarray(self.p, dtype=float)))

    def __len__(self) -> int:
        return len(self.p)

    def __getitem__(self, index):
        return self.p[index]

    def tolist(self) -> list[float]:
        return [float(x) for x in self.p]


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix. Build with `validate_density()`."""
    data: ComplexMatrix

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen(np.asarray(self.data, dtype=complex)))

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def diagonal(self) -> npt.NDArray[np.float64]:
        return np.real(np.diag(self.data)).copy()

    def expectation(self, operator: np.ndarray) -> float:
        """Tr[rho A] for a Hermitian operator A."""
        return float(np.real(np.trace(self.data @ operator)))

    def to_dict(self) -> dict:
        return {
            "re": np.real(self.data).tolist(),
            "im": np.imag(self.data).tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict, tol: Optional[Tolerances] = None) -> "DensityMatrix":
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
        if re.shape != im.shape:
            raise DimensionMismatch(
                f"re/im shapes differ: {re.shape} vs {im.shape}",
                invariant="re.shape == im.shape",
            )
        return validate_density(re + 1j * im, tol)


# =============================================================================
# CONSTRUCTION AND VALIDATION
# =============================================================================

def probability_vector(values, tol: Optional[Tolerances] = None) -> ProbabilityVector:
    """
    Validate a simplex vector.

    Entries in [-psd, 0) are clipped to zero; anything more negative, non-finite,
    or a sum off by more than the trace tolerance raises InvalidSimplex.
    """
    tol = tol or Tolerances.default()
    p = np.asarray(values, dtype=float).ravel()
    if p.size == 0 or not np.all(np.isfinite(p)):
        raise InvalidSimplex("Probability vector must be non-empty and finite", invariant="finite")
    if p.min() < -tol.psd:
        raise InvalidSimplex(
            f"Negative probability {p.min():.3e}",
            invariant="p_k >= 0",
            violation=float(-p.min()),
        )
    total = p.sum()
    if abs(total - 1.0) > tol.trace:
        raise InvalidSimplex(
            f"Probabilities sum to {total!r}",
            invariant="sum p_k == 1",
            violation=float(abs(total - 1.0)),
        )
    return ProbabilityVector(np.clip(p, 0.0, None))


def validate_density(m, tol: Optional[Tolerances] = None) -> DensityMatrix:
    """
    Validate a square complex matrix as a density matrix.

    Small anti-Hermitian parts (within tol.herm) are symmetrised away. Eigenvalues in
    [-tol.psd, 0) are clamped to zero and the spectrum renormalised; larger violations
    are errors.

    Raises:
        DimensionMismatch: matrix not square
        NotHermitian, TraceNotOne, NotPositive: the named invariant fails
    """
    tol = tol or Tolerances.default()
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DimensionMismatch(f"Density matrix must be square, got shape {m.shape}", invariant="square")
    if not np.all(np.isfinite(m)):
        raise ValidationError("Matrix has non-finite entries", invariant="finite entries")

    herm_dev = float(np.max(np.abs(m - m.conj().T)))
    if herm_dev > tol.herm:
        raise NotHermitian(
            f"max |rho_ij - conj(rho_ji)| = {herm_dev:.3e} exceeds {tol.herm:.1e}",
            invariant="Hermitian",
            violation=herm_dev,
        )
    m = 0.5 * (m + m.conj().T)

    trace = float(np.real(np.trace(m)))
    if abs(trace - 1.0) > tol.trace:
        raise TraceNotOne(
            f"Tr rho = {trace!r}",
            invariant="unit trace",
            violation=abs(trace - 1.0),
        )

    vals, vecs = _eigh(m)
    lowest = float(vals[0])
    if lowest < -tol.psd:
        raise NotPositive(
            f"Minimum eigenvalue {lowest:.3e} below -{tol.psd:.1e}",
            invariant="positive semidefinite",
            violation=-lowest,
        )
    if lowest < 0.0:
        if lowest < -tol.eig:
            logger.warning(f"Clamping eigenvalues down to {lowest:.3e} and renormalising")
        clamped = np.clip(vals, 0.0, None)
        clamped /= clamped.sum()
        m = (vecs * clamped) @ vecs.conj().T
        m = 0.5 * (m + m.conj().T)

    return DensityMatrix(m)


def diagonal_density(populations, tol: Optional[Tolerances] = None) -> DensityMatrix:
    """Incoherent state with the given populations on the diagonal."""
    p = probability_vector(populations, tol)
    return DensityMatrix(np.diag(p.p).astype(complex))


def thermal_state(energies, temperature: float, k_b: Optional[float] = None) -> DensityMatrix:
    """Gibbs state exp(-E/kT)/Z of a diagonal spectrum, computed in log space."""
    k_b = config.units.k_b if k_b is None else k_b
    energies = np.asarray(energies, dtype=float)
    if np.isinf(temperature):
        weights = np.full(energies.size, 1.0 / energies.size)
    else:
        weights = softmax(-energies / (k_b * temperature))
    return DensityMatrix(np.diag(weights).astype(complex))


def qubit_eigenvalues(p_g: float, F: complex) -> tuple[float, float]:
    """Closed-form (lambda+, lambda-) of [[p_g, F], [F*, 1 - p_g]]."""
    p_e = 1.0 - p_g
    root = min(float(np.sqrt((p_g - p_e) ** 2 + 4.0 * abs(F) ** 2)), 1.0)
    lam_plus = 0.5 * (1.0 + root)
    # lambda- from the determinant; 1 - root cancels catastrophically near a pure state
    det = max(p_g * p_e - abs(F) ** 2, 0.0)
    return lam_plus, det / lam_plus


def check_unitary(U: np.ndarray, atol: float = 1e-10) -> float:
    """
    Check U^dagger U = I.

    Returns:
        The max entrywise deviation.

    Raises:
        NotUnitary: deviation above atol
    """
    U = np.asarray(U)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise DimensionMismatch(f"Unitary must be square, got shape {U.shape}", invariant="square")
    deviation = float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))))
    if deviation > atol:
        raise NotUnitary(
            f"max |U^dagger U - I| = {deviation:.3e}",
            invariant="unitary",
            violation=deviation,
        )
    return deviation


# =============================================================================
# SPECTRA AND ENTROPIES
# =============================================================================

def _eigh(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    try:
        return scipy.linalg.eigh(m)
    except scipy.linalg.LinAlgError as e:
        raise NoConvergence(f"Hermitian eigensolver failed: {e}", invariant="eigensolver converged") from e


def hermitian_eigenvalues(rho: DensityMatrix, tol: Optional[Tolerances] = None) -> ProbabilityVector:
    """Eigenvalues of a density matrix, sorted descending."""
    tol = tol or Tolerances.default()
    try:
        vals = scipy.linalg.eigvalsh(rho.data)
    except scipy.linalg.LinAlgError as e:
        raise NoConvergence(f"Hermitian eigensolver failed: {e}", invariant="eigensolver converged") from e
    # Solver round-off can leave eigenvalues a hair below zero
    vals = np.clip(vals[::-1], 0.0, None) if vals.min() >= -tol.psd else vals[::-1]
    return ProbabilityVector(vals)


def shannon_entropy(p: Union[ProbabilityVector, npt.ArrayLike], tol: Optional[Tolerances] = None) -> float:
    """H(p) = -sum p ln p in nats, with 0 ln 0 = 0."""
    if not isinstance(p, ProbabilityVector):
        p = probability_vector(p, tol)
    return float(np.sum(entr(p.p)))


def binary_entropy(x: float) -> float:
    """H(x) = -x ln x - (1 - x) ln(1 - x)."""
    return float(entr(x) + entr(1.0 - x))


def von_neumann_entropy(rho: DensityMatrix, tol: Optional[Tolerances] = None) -> float:
    """S(rho) = -Tr rho ln rho in nats."""
    return float(np.sum(entr(hermitian_eigenvalues(rho, tol).p)))


def dephase(rho: DensityMatrix) -> DensityMatrix:
    """Delete off-diagonal elements in the computational basis."""
    return DensityMatrix(np.diag(np.diag(rho.data)))


def relative_entropy_of_coherence(rho: DensityMatrix, tol: Optional[Tolerances] = None) -> float:
    """C_r(rho) = S(rho_diag) - S(rho)."""
    tol = tol or Tolerances.default()
    c = shannon_entropy(ProbabilityVector(np.clip(rho.diagonal, 0.0, None))) - von_neumann_entropy(rho, tol)
    if c < -tol.eig:
        logger.warning(f"Coherence {c:.3e} below -{tol.eig:.1e}; clamping to zero")
    return max(c, 0.0)


def log_on_support(sigma: DensityMatrix, cutoff: float = SUPPORT_CUTOFF) -> tuple[np.ndarray, np.ndarray]:
    """
    Matrix logarithm restricted to the support of sigma.

    Returns:
        (ln sigma on the support, projector onto the kernel)
    """
    vals, vecs = _eigh(sigma.data)
    support = vals > cutoff
    inside = vecs[:, support]
    outside = vecs[:, ~support]
    log_sigma = (inside * np.log(vals[support])) @ inside.conj().T
    return log_sigma, outside @ outside.conj().T


def trace_log(rho: DensityMatrix, sigma: DensityMatrix, cutoff: float = SUPPORT_CUTOFF) -> tuple[float, float]:
    """
    Tr[rho ln sigma] on the support of sigma.

    Returns:
        (Tr[rho ln sigma], weight of rho outside supp sigma)
    """
    if rho.dim != sigma.dim:
        raise DimensionMismatch(f"dims {rho.dim} and {sigma.dim} differ", invariant="equal dims")
    log_sigma, kernel = log_on_support(sigma, cutoff)
    return rho.expectation(log_sigma), rho.expectation(kernel)


def relative_entropy(rho: DensityMatrix, sigma: DensityMatrix, tol: Optional[Tolerances] = None) -> float:
    """S(rho || sigma) in nats; +inf when rho has weight outside supp sigma."""
    tol = tol or Tolerances.default()
    cross, outside = trace_log(rho, sigma)
    if outside > tol.herm:
        return float("inf")
    return max(-von_neumann_entropy(rho, tol) - cross, 0.0)


# =============================================================================
# COMPOSITION
# =============================================================================

def tensor(a, b):
    """Kronecker product; density matrices in give a density matrix out."""
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(np.kron(a.data, b.data))
    a = a.data if isinstance(a, DensityMatrix) else np.asarray(a)
    b = b.data if isinstance(b, DensityMatrix) else np.asarray(b)
    return np.kron(a, b)


def partial_trace(rho: DensityMatrix, dims: tuple[int, int], keep: Literal["A", "B"]) -> DensityMatrix:
    """
    Trace out one factor of a bipartite state.

    Args:
        rho: State on A (x) B
        dims: (dA, dB)
        keep: "A" or "B"
    """
    d_a, d_b = dims
    if d_a * d_b != rho.dim:
        raise DimensionMismatch(
            f"dims {dims} do not factor a {rho.dim}-dimensional state",
            invariant="dim == dA * dB",
        )
    blocks = rho.data.reshape(d_a, d_b, d_a, d_b)
    if keep == "A":
        reduced = np.einsum("ijkj->ik", blocks)
    elif keep == "B":
        reduced = np.einsum("ijil->jl", blocks)
    else:
        raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")
    return DensityMatrix(0.5 * (reduced + reduced.conj().T))


def haar_unitary(d: int, rng: np.random.Generator) -> ComplexMatrix:
    """
    Haar-distributed d x d unitary.

    QR of a complex Ginibre matrix with the phases of R's diagonal moved into Q,
    which makes the distribution exactly Haar.
    """
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def conjugate(rho: DensityMatrix, U: np.ndarray, atol: float = 1e-10) -> DensityMatrix:
    """U rho U^dagger."""
    U = np.asarray(U, dtype=complex)
    if U.shape != rho.data.shape:
        raise DimensionMismatch(
            f"unitary shape {U.shape} does not match state dim {rho.dim}",
            invariant="matching dims",
        )
    check_unitary(U, atol)
    out = U @ rho.data @ U.conj().T
    return DensityMatrix(0.5 * (out + out.conj().T))
