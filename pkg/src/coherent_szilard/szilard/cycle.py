"""
Closed-form Szilard cycle with a coherent demon

Every report quantity depends on the cycle only through P_R and the demon state:

    dE_tot = W_mea = P_R (p_g - p_e) delta
    Q_tot  = k_B T [S(rho_D^f) - S(rho_D^i)] = T dS_c + k_B T dC_r
    W_tot  = Q_tot - dE_tot
    eta    = W_tot / Q_tot
"""

import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.optimize
from scipy.special import xlogy

from ..config import config
from ..errors import DegenerateCycle, NoConvergence, NoSignChange, ValidationError
from ..matrixcore import relative_entropy, von_neumann_entropy
from .demon import DemonState, final_demon
from .well import WellConfig, insertion_probabilities

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CycleReport:
    """Energetics of one cycle. Heats and works in energy units, dS_c in k_B nats, dC_r in nats."""
    p_l: float
    p_r: float
    w_mea: float
    delta_e_tot: float
    delta_s_c: float
    delta_c_r: float
    q_incoh: float
    q_coh: float
    q_tot: float
    w_incoh: float
    w_coh: float
    w_tot: float
    eta: Optional[float]
    eta_carnot: float
    eta_quantum_limit: Optional[float]
    demon_final: DemonState

    NUMERIC_FIELDS = (
        "p_l", "p_r", "w_mea", "delta_e_tot", "delta_s_c", "delta_c_r",
        "q_incoh", "q_coh", "q_tot", "w_incoh", "w_coh", "w_tot", "eta",
    )

    def to_dict(self) -> dict:
        data = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        data["demon_final"] = self.demon_final.to_dict()
        return data


def assemble_report(
    cfg: WellConfig,
    *,
    p_l: float,
    p_r: float,
    w_mea: float,
    delta_e_tot: float,
    delta_s_c: float,
    delta_c_r: float,
    demon_final: DemonState,
    eta_quantum_limit: Optional[float] = None,
) -> CycleReport:
    """Fill in the heat/work splits and efficiency from the primitive cycle quantities."""
    q_incoh = cfg.T * delta_s_c
    q_coh = cfg.k_b * cfg.T * delta_c_r
    q_tot = q_incoh + q_coh
    w_tot = q_tot - delta_e_tot
    eta = w_tot / q_tot if abs(q_tot) > config.tolerances.eig else None
    return CycleReport(
        p_l=p_l,
        p_r=p_r,
        w_mea=w_mea,
        delta_e_tot=delta_e_tot,
        delta_s_c=delta_s_c,
        delta_c_r=delta_c_r,
        q_incoh=q_incoh,
        q_coh=q_coh,
        q_tot=q_tot,
        w_incoh=q_incoh - delta_e_tot,
        w_coh=q_coh,
        w_tot=w_tot,
        eta=eta,
        eta_carnot=cfg.eta_carnot,
        eta_quantum_limit=eta_quantum_limit,
        demon_final=demon_final,
    )


def _entropy_changes(d: DemonState, P_R: float) -> tuple[DemonState, float, float]:
    """(final demon, dS_c / k_B, total dS / k_B) at right-side probability P_R."""
    d_final = final_demon(d, 1.0 - P_R, P_R)
    # Four-term diagonal entropy change
    ds_c = (
        xlogy(d.p_g, d.p_g) + xlogy(d.p_e, d.p_e)
        - xlogy(d_final.p_g, d_final.p_g) - xlogy(d_final.p_e, d_final.p_e)
    )
    return d_final, float(ds_c), d_final.entropy() - d.entropy()


def cycle_at(P_R: float, cfg: WellConfig, d: DemonState, *, quantum_limit: bool = True) -> CycleReport:
    """
    Closed-form cycle at a given right-side probability.

    Never raises on a degenerate cycle; eta is None when Q_tot vanishes.
    """
    if not 0.0 <= P_R <= 1.0:
        raise ValidationError(f"P_R must lie in [0, 1], got {P_R}", invariant="0 <= P_R <= 1", violation=P_R)
    d_final, ds_c, ds = _entropy_changes(d, P_R)
    de_tot = P_R * (d.p_g - d.p_e) * cfg.delta
    return assemble_report(
        cfg,
        p_l=1.0 - P_R,
        p_r=P_R,
        w_mea=de_tot,
        delta_e_tot=de_tot,
        delta_s_c=cfg.k_b * ds_c,
        delta_c_r=ds - ds_c,
        demon_final=d_final,
        eta_quantum_limit=quantum_carnot_limit(cfg, d) if quantum_limit else None,
    )


def cycle_report(cfg: WellConfig, d: DemonState, P_R: Optional[float] = None) -> CycleReport:
    """
    Closed-form cycle for an engine, with P_R from the insertion position unless given.

    Raises:
        DegenerateCycle: Q_tot ~ 0 so eta is undefined; the report rides on the error
    """
    if P_R is None:
        P_R = insertion_probabilities(cfg)[1]
    report = cycle_at(P_R, cfg, d)
    if report.eta is None:
        raise DegenerateCycle(
            f"Q_tot = {report.q_tot:.3e} at P_R = {P_R:.6g}; efficiency undefined",
            report=report,
            violation=report.q_tot,
        )
    return report


def efficiency_curve(cfg: WellConfig, d: DemonState, p_r_values) -> list[CycleReport]:
    """Reports over a P_R grid, in grid order."""
    limit = quantum_carnot_limit(cfg, d)
    reports = []
    for P_R in p_r_values:
        report = cycle_at(float(P_R), cfg, d, quantum_limit=False)
        reports.append(dataclasses.replace(report, eta_quantum_limit=limit))
    return reports


def free_energy_work(cfg: WellConfig, d: DemonState, P_R: float) -> float:
    """
    W_tot as minus the change of the demon's nonequilibrium free energy.

    Evaluated with the generic eigensolver rather than the closed forms.
    """
    h_demon = np.diag([cfg.E_g, cfg.E_e]).astype(complex)
    d_final = final_demon(d, 1.0 - P_R, P_R)

    def free_energy(state: DemonState) -> float:
        rho = state.density()
        return rho.expectation(h_demon) - cfg.k_b * cfg.T * von_neumann_entropy(rho)

    return -(free_energy(d_final) - free_energy(d))


def quantum_carnot_limit(cfg: WellConfig, d: DemonState) -> Optional[float]:
    """
    Efficiency in the P_R -> 0 limit, 1 - (p_g - p_e) delta / (k_B T D(X rho X || rho)).

    Equals the Carnot value for an incoherent thermal demon and 1 for a pure demon;
    None when X rho X = rho.
    """
    divergence = relative_entropy(d.flipped().density(), d.density())
    if math.isinf(divergence):
        return 1.0
    if divergence <= config.tolerances.eig:
        return None
    return 1.0 - (d.p_g - d.p_e) * cfg.delta / (cfg.k_b * cfg.T * divergence)


# =============================================================================
# ROOT-FINDS
# =============================================================================

def _scan_grid() -> np.ndarray:
    """P_R scan points: geometric near 0, linear over the bulk."""
    rf = config.root_find
    half = max(rf.scan_points // 2, 2)
    return np.unique(np.concatenate([
        np.geomspace(rf.edge, 0.1, half),
        np.linspace(0.1, 1.0 - rf.edge, half),
    ]))


def _first_downward_root(fn: Callable[[float], float], what: str) -> float:
    """First root of fn on (0, 1) where fn goes from positive to non-positive."""
    grid = _scan_grid()
    values = np.array([fn(float(x)) for x in grid])
    crossings = np.nonzero((values[:-1] > 0.0) & (values[1:] <= 0.0))[0]
    if crossings.size == 0:
        raise NoSignChange(
            f"No {what} crossing on P_R in [{grid[0]:.1e}, {grid[-1]:.6f}]",
            invariant=f"{what} changes sign",
        )
    i = int(crossings[0])
    if values[i + 1] == 0.0:
        return float(grid[i + 1])
    lo, hi = float(grid[i]), float(grid[i + 1])
    logger.debug(f"{what}: bracket [{lo:.6g}, {hi:.6g}]")

    rf = config.root_find
    try:
        return float(scipy.optimize.bisect(fn, lo, hi, xtol=rf.xtol, rtol=rf.rtol, maxiter=rf.max_iter))
    except RuntimeError as e:
        raise NoConvergence(f"{what} bisection failed: {e}", invariant="bisection converged") from e


def critical_probability(cfg: WellConfig, d: DemonState) -> float:
    """
    P_R where the efficiency crosses the Carnot value 1 - T_D/T.

    Root of T_D (dS_c + k_B dC_r) = P_R (p_g - p_e) delta.

    Raises:
        NoSignChange: no crossing (always the case for an incoherent demon)
    """
    if not d.p_g > d.p_e:
        raise NoSignChange(
            f"critical probability needs p_g > p_e, got p_g = {d.p_g}",
            invariant="p_g > p_e",
        )
    gap = (d.p_g - d.p_e) * cfg.delta

    def excess(P_R: float) -> float:
        _, _, ds = _entropy_changes(d, P_R)
        return cfg.T_D * cfg.k_b * ds - P_R * gap

    root = _first_downward_root(excess, "Carnot")
    residual = abs(excess(root))
    if residual > 1e-10:
        raise NoConvergence(f"Carnot crossing residual {residual:.3e}", invariant="residual <= 1e-10",
                            violation=residual)
    return root


def zero_work_probability(cfg: WellConfig, d: DemonState) -> float:
    """
    P_R above which the cycle stops delivering work, W_tot(P_R) = 0.

    Raises:
        NoSignChange: W_tot never turns negative (e.g. p_g = p_e)
    """
    def work(P_R: float) -> float:
        return cycle_at(P_R, cfg, d, quantum_limit=False).w_tot

    root = _first_downward_root(work, "zero-work")
    residual = abs(work(root))
    if residual > 1e-12:
        raise NoConvergence(f"zero-work residual {residual:.3e}", invariant="|W_tot| <= 1e-12",
                            violation=residual)
    return root
