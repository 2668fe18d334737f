"""
Brute-force matrix oracle for the Szilard cycle

Builds the five stage states explicitly on a truncated space and extracts the cycle
report from them, for comparison against the closed forms in `cycle`.

Basis: {left_n, right_n, full_n} x {g, e} for n = 1..n_max. The three level families
are treated as mutually orthonormal labels. Index = (sector * n_max + n - 1) * 2 + demon.
"""

import dataclasses
import logging
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from ..config import config
from ..errors import TruncationInsufficient, ValidationError
from ..matrixcore import (
    DensityMatrix,
    Tolerances,
    check_unitary,
    partial_trace,
    relative_entropy_of_coherence,
    shannon_entropy,
    tensor,
    validate_density,
    von_neumann_entropy,
)
from .cycle import CycleReport, assemble_report, cycle_at, quantum_carnot_limit
from .demon import DemonState, final_demon
from .well import WellConfig, equilibrium_wall_position, insertion_probabilities, log_partition_function

logger = logging.getLogger(__name__)

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


class Stage(str, Enum):
    INITIAL = "initial"
    INSERTED = "inserted"
    MEASURED = "measured"
    EXPANDED = "expanded"
    REMOVED = "removed"


class Sector(IntEnum):
    LEFT = 0
    RIGHT = 1
    FULL = 2


@dataclass(frozen=True)
class TruncatedCycleState:
    """One stage of the cycle on the 6 n_max dimensional oracle space."""
    stage: Stage
    state: DensityMatrix
    n_max: int

    def index(self, sector: Sector, n: int, demon: int) -> int:
        return (int(sector) * self.n_max + n - 1) * 2 + demon

    def basis_labels(self) -> list[str]:
        return [
            f"{sector.name.lower()}_{n},{'ge'[demon]}"
            for sector in Sector
            for n in range(1, self.n_max + 1)
            for demon in (0, 1)
        ]

    def demon_state(self) -> DensityMatrix:
        return partial_trace(self.state, (3 * self.n_max, 2), keep="B")

    def sector_weights(self) -> dict[str, float]:
        diag = self.state.diagonal.reshape(3, self.n_max * 2)
        return {sector.name.lower(): float(diag[sector].sum()) for sector in Sector}


@dataclass
class OracleResult:
    """Stage states, the oracle-derived report and its agreement with the closed forms."""
    states: list[TruncatedCycleState]
    report: CycleReport
    closed_form: CycleReport
    field_diffs: dict[str, float]
    max_abs_diff: float
    demon_final_deviation: float
    unitarity_deviation: float
    trace_deviation: float
    stage_energies: dict[str, float]
    measurement_work: float
    l_g: float
    l_e: float
    extras: dict = field(default_factory=dict)

    def state(self, stage: Stage) -> TruncatedCycleState:
        return next(s for s in self.states if s.stage == stage)

    def to_dict(self) -> dict:
        return {
            "report": self.report.to_dict(),
            "field_diffs": self.field_diffs,
            "oracle_max_abs_diff": self.max_abs_diff,
            "demon_final_deviation": self.demon_final_deviation,
            "unitarity_deviation": self.unitarity_deviation,
            "trace_deviation": self.trace_deviation,
            "stage_energies": self.stage_energies,
            "measurement_work": self.measurement_work,
            "l_g": self.l_g,
            "l_e": self.l_e,
        }


def level_populations(width: float, cfg: WellConfig) -> np.ndarray:
    """Gibbs populations P_n(width), n = 1..n_max, floored and renormalised."""
    # Raises TruncationInsufficient when n_max cannot hold this width
    log_partition_function(width, cfg.T, cfg)
    n = np.arange(1, cfg.n_max + 1, dtype=float)
    log_terms = -(cfg.level_unit / (cfg.k_b * cfg.T * width * width)) * n * n
    p = np.exp(log_terms - logsumexp(log_terms))
    p = np.maximum(p, config.truncation.population_floor)
    return p / p.sum()


def level_energies(width: float, cfg: WellConfig) -> np.ndarray:
    n = np.arange(1, cfg.n_max + 1, dtype=float)
    return cfg.level_unit * n * n / (width * width)


def default_expansion_endpoints(cfg: WellConfig, d: DemonState, P_L: float, P_R: float) -> tuple[float, float]:
    """
    Demon-conditioned equilibrium wall positions (l_g, l_e).

    On the g branch the left gas carries weight p_g P_L and the right gas p_e P_R;
    the e branch swaps p_g and p_e.
    """
    def branch(w_left: float, w_right: float) -> float:
        total = w_left + w_right
        return equilibrium_wall_position(cfg, (w_left / total, w_right / total))

    return branch(d.p_g * P_L, d.p_e * P_R), branch(d.p_e * P_L, d.p_g * P_R)


def _controlled_not(n_max: int) -> np.ndarray:
    """Flip the demon on the right sector, identity elsewhere."""
    flip = np.zeros(3)
    flip[Sector.RIGHT] = 1.0
    keep = 1.0 - flip
    identity_levels = np.eye(n_max)
    return (
        np.kron(np.kron(np.diag(keep), identity_levels), np.eye(2))
        + np.kron(np.kron(np.diag(flip), identity_levels), PAULI_X)
    ).astype(complex)


def _expansion_operator(cfg: WellConfig, l_g: float, l_e: float) -> np.ndarray:
    """Diagonal O_exp: level n of each sector rescaled to the demon-conditioned width."""
    n_max = cfg.n_max
    p_left = level_populations(cfg.l, cfg)
    p_right = level_populations(cfg.L - cfg.l, cfg)
    amplitudes = np.zeros((3, n_max, 2))
    for demon, x in enumerate((l_g, l_e)):
        amplitudes[Sector.LEFT, :, demon] = np.sqrt(level_populations(x, cfg) / p_left)
        amplitudes[Sector.RIGHT, :, demon] = np.sqrt(level_populations(cfg.L - x, cfg) / p_right)
    return np.diag(amplitudes.ravel()).astype(complex)


def _removal_operator(cfg: WellConfig, l_g: float, l_e: float) -> np.ndarray:
    """O_rem: left_n and right_n map onto full_n, reweighted to the full-box populations."""
    n_max = cfg.n_max
    p_full = level_populations(cfg.L, cfg)
    op = np.zeros((6 * n_max, 6 * n_max), dtype=complex)
    for demon, x in enumerate((l_g, l_e)):
        for sector, width in ((Sector.LEFT, x), (Sector.RIGHT, cfg.L - x)):
            ratio = np.sqrt(p_full / level_populations(width, cfg))
            for k in range(n_max):
                op[(Sector.FULL * n_max + k) * 2 + demon, (sector * n_max + k) * 2 + demon] = ratio[k]
    return op


def _stage_hamiltonians(cfg: WellConfig, l_g: float, l_e: float) -> dict[Stage, np.ndarray]:
    """Diagonal of H_S + H_D at each stage."""
    demon = np.array([cfg.E_g, cfg.E_e])
    e_full = level_energies(cfg.L, cfg)
    e_left = level_energies(cfg.l, cfg)
    e_right = level_energies(cfg.L - cfg.l, cfg)

    def assemble(left: np.ndarray, right: np.ndarray) -> np.ndarray:
        # left, right: (n_max, 2) system energies per demon branch
        system = np.stack([left, right, np.repeat(e_full[:, None], 2, axis=1)])
        return (system + demon[None, None, :]).ravel()

    inserted = assemble(np.repeat(e_left[:, None], 2, axis=1), np.repeat(e_right[:, None], 2, axis=1))
    expanded = assemble(
        np.stack([level_energies(l_g, cfg), level_energies(l_e, cfg)], axis=1),
        np.stack([level_energies(cfg.L - l_g, cfg), level_energies(cfg.L - l_e, cfg)], axis=1),
    )
    return {
        Stage.INITIAL: inserted,
        Stage.INSERTED: inserted,
        Stage.MEASURED: inserted,
        Stage.EXPANDED: expanded,
        Stage.REMOVED: inserted,
    }


def oracle_run_cycle(
    cfg: WellConfig,
    d: DemonState,
    l_g: Optional[float] = None,
    l_e: Optional[float] = None,
) -> OracleResult:
    """
    Run the cycle on explicit density matrices and compare with the closed forms.

    Args:
        cfg: Engine configuration; n_max sets the oracle dimension 6 n_max
        d: Initial demon
        l_g, l_e: Expansion endpoints for the g and e branches; default to the
            demon-conditioned equilibrium positions

    Raises:
        TruncationInsufficient: a stage trace drifts beyond the truncation budget
        NotUnitary: the controlled-NOT fails its self-check
    """
    P_L, P_R = insertion_probabilities(cfg)
    if l_g is None or l_e is None:
        default_g, default_e = default_expansion_endpoints(cfg, d, P_L, P_R)
        l_g = default_g if l_g is None else l_g
        l_e = default_e if l_e is None else l_e
    for name, x in (("l_g", l_g), ("l_e", l_e)):
        if not 0.0 < x < cfg.L:
            raise ValidationError(f"{name} must lie in (0, L), got {x}", invariant=f"0 < {name} < L", violation=x)

    n_max = cfg.n_max
    dim = 6 * n_max
    budget = 7 * cfg.tail_eps + 64 * dim * np.finfo(float).eps
    tol = dataclasses.replace(Tolerances.default(), trace=max(budget, Tolerances.default().trace))
    logger.debug(f"Oracle on {dim} states, l_g={l_g:.6g}, l_e={l_e:.6g}")

    def stage_state(stage: Stage, matrix: np.ndarray) -> TruncatedCycleState:
        drift = abs(float(np.trace(matrix).real) - 1.0)
        if drift > budget:
            raise TruncationInsufficient(
                f"Stage {stage.value} trace drifts by {drift:.3e}",
                invariant="|Tr rho - 1| <= truncation budget",
                violation=drift,
            )
        return TruncatedCycleState(stage, validate_density(matrix, tol), n_max)

    sector_populations = np.zeros((3, n_max))
    sector_populations[Sector.FULL] = level_populations(cfg.L, cfg)
    rho_demon = d.matrix()
    initial = stage_state(Stage.INITIAL, tensor(np.diag(sector_populations.ravel()), rho_demon))

    sector_populations[:] = 0.0
    sector_populations[Sector.LEFT] = P_L * level_populations(cfg.l, cfg)
    sector_populations[Sector.RIGHT] = P_R * level_populations(cfg.L - cfg.l, cfg)
    inserted = stage_state(Stage.INSERTED, tensor(np.diag(sector_populations.ravel()), rho_demon))

    U = _controlled_not(n_max)
    unitarity = check_unitary(U, atol=1e-14)
    measured = stage_state(Stage.MEASURED, U @ inserted.state.data @ U.conj().T)

    O_exp = _expansion_operator(cfg, l_g, l_e)
    expanded = stage_state(Stage.EXPANDED, O_exp @ measured.state.data @ O_exp.conj().T)

    O_rem = _removal_operator(cfg, l_g, l_e)
    removed = stage_state(Stage.REMOVED, O_rem @ expanded.state.data @ O_rem.conj().T)

    states = [initial, inserted, measured, expanded, removed]
    hamiltonians = _stage_hamiltonians(cfg, l_g, l_e)
    stage_energies = {
        s.stage.value: float(np.real(np.sum(hamiltonians[s.stage] * s.state.diagonal))) for s in states
    }

    demon_i = initial.demon_state()
    demon_f = removed.demon_state()
    weights = inserted.sector_weights()
    delta_s_c = cfg.k_b * (shannon_entropy(np.clip(demon_f.diagonal, 0, None))
                           - shannon_entropy(np.clip(demon_i.diagonal, 0, None)))
    delta_c_r = relative_entropy_of_coherence(demon_i) - relative_entropy_of_coherence(demon_f)
    delta_s = von_neumann_entropy(demon_f) - von_neumann_entropy(demon_i)
    logger.debug(f"Oracle entropy change {delta_s:.15g}, coherence consumption {delta_c_r:.15g}")

    f_entry = demon_f.data[0, 1]
    report = assemble_report(
        cfg,
        p_l=weights["left"],
        p_r=weights["right"],
        w_mea=stage_energies[Stage.MEASURED.value] - stage_energies[Stage.INSERTED.value],
        delta_e_tot=stage_energies[Stage.REMOVED.value] - stage_energies[Stage.INITIAL.value],
        delta_s_c=delta_s_c,
        delta_c_r=delta_c_r,
        demon_final=DemonState(float(demon_f.data[0, 0].real), complex(f_entry)),
        eta_quantum_limit=quantum_carnot_limit(cfg, d),
    )
    closed = cycle_at(P_R, cfg, d)

    diffs = {}
    for name in CycleReport.NUMERIC_FIELDS:
        a, b = getattr(report, name), getattr(closed, name)
        if a is None or b is None:
            continue
        diffs[name] = abs(a - b)

    expected_demon = final_demon(d, P_L, P_R).matrix()
    demon_deviation = float(np.max(np.abs(demon_f.data - expected_demon)))
    trace_deviation = max(abs(float(np.trace(s.state.data).real) - 1.0) for s in states)

    return OracleResult(
        states=states,
        report=report,
        closed_form=closed,
        field_diffs=diffs,
        max_abs_diff=max(diffs.values()) if diffs else 0.0,
        demon_final_deviation=demon_deviation,
        unitarity_deviation=unitarity,
        trace_deviation=trace_deviation,
        stage_energies=stage_energies,
        measurement_work=stage_energies[Stage.MEASURED.value] - stage_energies[Stage.INSERTED.value],
        l_g=l_g,
        l_e=l_e,
        extras={"entropy_change": delta_s, "sector_weights": weights},
    )
