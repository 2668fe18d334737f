"""
One measurement-feedback protocol of the information heat engine

Memory M, system S and reservoir R start in rho_M (x) Gibbs(H_S) (x) Gibbs(H_R).
Stages:

1. S and R interact through U1_SR; the memory is idle.
2. U2 acts on MSR and the memory is read out with rank-1 projectors |k><k|.
3. Outcome k triggers the feedback unitary U_SR^k; H_S is quenched to its final form.

The report carries the extracted work, the coherence-modified second-law bound
W_ext <= -dF_S + T dS_c + k_B T dC_r and every entropy inequality on the way to it.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from ..config import config
from ..errors import DimensionMismatch, ValidationError
from ..matrixcore import (
    ComplexMatrix,
    DensityMatrix,
    ProbabilityVector,
    check_unitary,
    haar_unitary,
    partial_trace,
    probability_vector,
    relative_entropy_of_coherence,
    shannon_entropy,
    tensor,
    thermal_state,
    trace_log,
    validate_density,
    von_neumann_entropy,
)

logger = logging.getLogger(__name__)

MAX_DIM = 64
# Outcomes rarer than this carry no post-measurement state
OUTCOME_CUTOFF = 1e-15
# Weight of rho_SR^f outside supp(canonical state) above which Klein is skipped
SUPPORT_TOLERANCE = 1e-10


def _maximally_coherent(d: int) -> DensityMatrix:
    return DensityMatrix(np.full((d, d), 1.0 / d, dtype=complex))


@dataclass(frozen=True)
class IheConfig:
    """Dimensions, Hamiltonians, bath temperature and initial memory for the IHE."""
    d_M: int = 2
    d_S: int = 2
    d_R: int = 2
    T: float = 1.0
    H_S_initial: Optional[tuple[float, ...]] = None
    H_S_final: Optional[tuple[float, ...]] = None
    H_R: Optional[tuple[float, ...]] = None
    memory_initial: Optional[DensityMatrix] = None
    trials: int = field(default_factory=lambda: config.monte_carlo.trials)
    seed: int = 0
    k_b: float = field(default_factory=lambda: config.units.k_b)

    def __post_init__(self):
        for name in ("d_M", "d_S", "d_R"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1", invariant=f"{name} >= 1")
        if self.d_M * self.d_S * self.d_R > MAX_DIM:
            raise ValidationError(
                f"d_M d_S d_R = {self.d_M * self.d_S * self.d_R} exceeds {MAX_DIM}",
                invariant=f"product dim <= {MAX_DIM}",
            )
        if not self.T > 0.0:
            raise ValidationError(f"T must be positive, got {self.T}", invariant="T > 0", violation=self.T)
        if self.trials < 1:
            raise ValidationError(f"trials must be >= 1, got {self.trials}", invariant="trials >= 1")

        defaults = {
            "H_S_initial": (self.H_S_initial, self.d_S),
            "H_S_final": (self.H_S_final if self.H_S_final is not None else self.H_S_initial, self.d_S),
            "H_R": (self.H_R, self.d_R),
        }
        for name, (spectrum, d) in defaults.items():
            spectrum = tuple(float(e) for e in (np.arange(d) if spectrum is None else spectrum))
            if len(spectrum) != d:
                raise DimensionMismatch(
                    f"{name} has {len(spectrum)} levels, expected {d}",
                    invariant=f"len({name}) == {d}",
                )
            if not all(np.isfinite(spectrum)):
                raise ValidationError(f"{name} has non-finite energies", invariant="finite spectrum")
            object.__setattr__(self, name, spectrum)

        memory = self.memory_initial
        if memory is None:
            memory = _maximally_coherent(self.d_M)
        elif not isinstance(memory, DensityMatrix):
            memory = validate_density(memory)
        if memory.dim != self.d_M:
            raise DimensionMismatch(
                f"memory_initial has dim {memory.dim}, expected {self.d_M}",
                invariant="memory dim == d_M",
            )
        object.__setattr__(self, "memory_initial", memory)

    @property
    def d_SR(self) -> int:
        return self.d_S * self.d_R

    @property
    def dim(self) -> int:
        return self.d_M * self.d_SR

    def free_energy(self, spectrum: tuple[float, ...]) -> float:
        """F = -k_B T ln Z."""
        beta = 1.0 / (self.k_b * self.T)
        return float(-logsumexp(-beta * np.asarray(spectrum)) / beta)

    def to_dict(self) -> dict:
        return {
            "d_M": self.d_M,
            "d_S": self.d_S,
            "d_R": self.d_R,
            "T": self.T,
            "H_S_initial": list(self.H_S_initial),
            "H_S_final": list(self.H_S_final),
            "H_R": list(self.H_R),
            "memory_initial": self.memory_initial.to_dict(),
            "trials": self.trials,
            "seed": self.seed,
        }


def _matrix_dict(m: np.ndarray) -> dict:
    return {"re": np.real(m).tolist(), "im": np.imag(m).tolist()}


@dataclass(frozen=True, eq=False)
class IheProtocol:
    """Interaction U1_SR, measurement coupling U2 and the feedback unitaries U_SR^k."""
    U1_SR: ComplexMatrix
    U2: ComplexMatrix
    feedback: tuple[ComplexMatrix, ...]

    @classmethod
    def sample(cls, cfg: IheConfig, rng: np.random.Generator, diagonal_preserving: bool = False) -> "IheProtocol":
        """
        Haar-random protocol.

        With diagonal_preserving, U2 is controlled by the memory basis
        (sum_k |k><k| (x) V_k), so the readout leaves the memory populations unchanged.
        """
        u1 = haar_unitary(cfg.d_SR, rng)
        if diagonal_preserving:
            u2 = np.zeros((cfg.dim, cfg.dim), dtype=complex)
            for k in range(cfg.d_M):
                block = slice(k * cfg.d_SR, (k + 1) * cfg.d_SR)
                u2[block, block] = haar_unitary(cfg.d_SR, rng)
        else:
            u2 = haar_unitary(cfg.dim, rng)
        feedback = tuple(haar_unitary(cfg.d_SR, rng) for _ in range(cfg.d_M))
        return cls(u1, u2, feedback)

    @classmethod
    def identity(cls, cfg: IheConfig) -> "IheProtocol":
        eye_sr = np.eye(cfg.d_SR, dtype=complex)
        return cls(eye_sr, np.eye(cfg.dim, dtype=complex), tuple(eye_sr for _ in range(cfg.d_M)))

    def validate(self, cfg: IheConfig, atol: float = 1e-12) -> None:
        """
        Raises:
            DimensionMismatch: wrong shapes or feedback count
            NotUnitary: any component off unitarity by more than atol
        """
        if len(self.feedback) != cfg.d_M:
            raise DimensionMismatch(
                f"{len(self.feedback)} feedback unitaries for d_M = {cfg.d_M}",
                invariant="one feedback unitary per outcome",
            )
        for name, U, d in [("U1_SR", self.U1_SR, cfg.d_SR), ("U2", self.U2, cfg.dim)] + [
            (f"feedback[{k}]", U, cfg.d_SR) for k, U in enumerate(self.feedback)
        ]:
            if np.shape(U) != (d, d):
                raise DimensionMismatch(f"{name} has shape {np.shape(U)}, expected {(d, d)}", invariant=f"{name} shape")
            check_unitary(U, atol)

    def to_dict(self) -> dict:
        return {
            "U1_SR": _matrix_dict(self.U1_SR),
            "U2": _matrix_dict(self.U2),
            "feedback": [_matrix_dict(U) for U in self.feedback],
        }


@dataclass(frozen=True)
class ChainCheck:
    """One step of the entropy inequality chain; residual >= 0 means it holds."""
    name: str
    residual: float
    holds: bool
    skipped: bool = False
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "residual": self.residual,
            "holds": self.holds,
            "skipped": self.skipped,
            "note": self.note,
        }


@dataclass(frozen=True)
class IheTrialReport:
    p_k: ProbabilityVector
    W_ext: float
    delta_E_S: float
    Q_S: float
    delta_F_S: float
    delta_S: float
    delta_S_c: float
    delta_C_r: float
    bound_rhs: float
    slack: float
    chain_checks: dict[str, ChainCheck]

    @property
    def holds(self) -> bool:
        return self.slack >= -config.tolerances.numerical_slack and all(
            c.holds or c.skipped for c in self.chain_checks.values()
        )

    def failed_checks(self) -> list[str]:
        return [name for name, c in self.chain_checks.items() if not (c.holds or c.skipped)]

    def to_dict(self) -> dict:
        return {
            "p_k": self.p_k.tolist(),
            "W_ext": self.W_ext,
            "delta_E_S": self.delta_E_S,
            "Q_S": self.Q_S,
            "delta_F_S": self.delta_F_S,
            "delta_S": self.delta_S,
            "delta_S_c": self.delta_S_c,
            "delta_C_r": self.delta_C_r,
            "bound_rhs": self.bound_rhs,
            "slack": self.slack,
            "chain_checks": {name: c.to_dict() for name, c in self.chain_checks.items()},
        }


def build_initial(cfg: IheConfig) -> DensityMatrix:
    """rho_M (x) Gibbs(H_S_initial) (x) Gibbs(H_R) at temperature T."""
    gibbs_s = thermal_state(cfg.H_S_initial, cfg.T, cfg.k_b)
    gibbs_r = thermal_state(cfg.H_R, cfg.T, cfg.k_b)
    return tensor(cfg.memory_initial, tensor(gibbs_s, gibbs_r))


def _check(name: str, residual: float, tolerance: float) -> ChainCheck:
    return ChainCheck(name, float(residual), bool(residual >= -tolerance))


def run_protocol(cfg: IheConfig, prot: IheProtocol) -> IheTrialReport:
    """
    Run one protocol and evaluate the second-law chain.

    Sign convention: Q_S = <E_R>_i - <E_R>_f (heat drawn from the reservoir) and
    W_ext = -dE_S + Q_S.

    Raises:
        DimensionMismatch, NotUnitary: malformed protocol
    """
    prot.validate(cfg)
    slack_tol = config.tolerances.numerical_slack
    d_M, d_S, d_R, d_SR = cfg.d_M, cfg.d_S, cfg.d_R, cfg.d_SR
    k_b, T = cfg.k_b, cfg.T

    rho_i = build_initial(cfg).data
    rho_sr_i = partial_trace(DensityMatrix(rho_i), (d_M, d_SR), keep="B")

    U1 = np.kron(np.eye(d_M), prot.U1_SR)
    rho_1 = U1 @ rho_i @ U1.conj().T
    rho_pre = prot.U2 @ rho_1 @ prot.U2.conj().T

    blocks = rho_pre.reshape(d_M, d_SR, d_M, d_SR)
    raw_p = np.array([np.trace(blocks[k, :, k, :]).real for k in range(d_M)])
    p_k = probability_vector(np.clip(raw_p, 0.0, None) / np.clip(raw_p, 0.0, None).sum())

    rho_2 = np.zeros_like(rho_pre)
    rho_f = np.zeros_like(rho_pre)
    rho_sr_2 = np.zeros((d_SR, d_SR), dtype=complex)
    rho_sr_f = np.zeros((d_SR, d_SR), dtype=complex)
    conditional_entropy = 0.0
    for k in range(d_M):
        block = blocks[k, :, k, :]
        span = slice(k * d_SR, (k + 1) * d_SR)
        rho_2[span, span] = block
        rho_sr_2 += block
        fed = prot.feedback[k] @ block @ prot.feedback[k].conj().T
        rho_f[span, span] = fed
        rho_sr_f += fed
        if p_k[k] > OUTCOME_CUTOFF:
            post = 0.5 * (block + block.conj().T) / np.trace(block).real
            conditional_entropy += p_k[k] * von_neumann_entropy(DensityMatrix(post))

    rho_sr_2 = DensityMatrix(0.5 * (rho_sr_2 + rho_sr_2.conj().T))
    rho_sr_f = DensityMatrix(0.5 * (rho_sr_f + rho_sr_f.conj().T))
    rho_m_i = cfg.memory_initial
    rho_m_2 = partial_trace(DensityMatrix(rho_2), (d_M, d_SR), keep="A")
    rho_m_f = partial_trace(DensityMatrix(rho_f), (d_M, d_SR), keep="A")

    # Energies
    h_s_i = np.kron(np.diag(cfg.H_S_initial), np.eye(d_R))
    h_s_f = np.kron(np.diag(cfg.H_S_final), np.eye(d_R))
    h_r = np.kron(np.eye(d_S), np.diag(cfg.H_R))
    delta_E_S = rho_sr_f.expectation(h_s_f) - rho_sr_i.expectation(h_s_i)
    Q_S = rho_sr_i.expectation(h_r) - rho_sr_f.expectation(h_r)
    W_ext = -delta_E_S + Q_S
    delta_F_S = cfg.free_energy(cfg.H_S_final) - cfg.free_energy(cfg.H_S_initial)

    # Memory entropies, coherence taken in the measurement basis
    S_m_i = von_neumann_entropy(rho_m_i)
    S_m_2 = von_neumann_entropy(rho_m_2)
    S_m_f = von_neumann_entropy(rho_m_f)
    delta_S = S_m_f - S_m_i
    delta_S_c = k_b * (shannon_entropy(p_k) - shannon_entropy(np.clip(rho_m_i.diagonal, 0.0, None)))
    delta_C_r = relative_entropy_of_coherence(rho_m_i) - relative_entropy_of_coherence(rho_m_f)
    bound_rhs = -delta_F_S + T * delta_S_c + k_b * T * delta_C_r
    slack = bound_rhs - W_ext

    S_sr_i = von_neumann_entropy(rho_sr_i)
    S_sr_2 = von_neumann_entropy(rho_sr_2)
    S_sr_f = von_neumann_entropy(rho_sr_f)

    checks = {
        "measurement_entropy": _check("measurement_entropy", (S_m_2 + conditional_entropy) - (S_sr_i + S_m_i), slack_tol),
        "measurement_concavity": _check("measurement_concavity", S_sr_2 - conditional_entropy, slack_tol),
        "feedback_concavity": _check("feedback_concavity", S_sr_f - conditional_entropy, slack_tol),
        "memory_entropy_equality": _check("memory_entropy_equality", -abs(S_m_f - S_m_2), 1e-10),
        "entropy_increase": _check("entropy_increase", (S_sr_f - S_sr_i) + delta_S, slack_tol),
    }

    canonical = tensor(thermal_state(cfg.H_S_final, T, k_b), thermal_state(cfg.H_R, T, k_b))
    cross, outside = trace_log(rho_sr_f, canonical)
    if outside > SUPPORT_TOLERANCE:
        checks["klein"] = ChainCheck("klein", 0.0, True, skipped=True, note="support-deficient")
    else:
        checks["klein"] = _check("klein", -S_sr_f - cross, slack_tol)

    report = IheTrialReport(
        p_k=p_k,
        W_ext=W_ext,
        delta_E_S=delta_E_S,
        Q_S=Q_S,
        delta_F_S=delta_F_S,
        delta_S=delta_S,
        delta_S_c=delta_S_c,
        delta_C_r=delta_C_r,
        bound_rhs=bound_rhs,
        slack=slack,
        chain_checks=checks,
    )
    if not report.holds:
        logger.warning(f"Protocol fails: slack={slack:.3e}, failed={report.failed_checks()}")
    return report
