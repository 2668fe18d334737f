"""
Coherence-modified first law along a discretised path

A path is a sequence of (E_n, P_n) nodes at a fixed accounting temperature. Heat and
work split into an incoherent part integrated along the path and a coherent part
k_B T dC_r fixed by the endpoint states:

    Q = sum E dP + k_B T dC_r
    W = -sum P dE + k_B T dC_r
    dE = Q - W

Steps pair midpoint energies with population changes and midpoint populations with
energy changes, so dE = Q_incoh - W_incoh holds exactly on every step.
"""

import dataclasses
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import numpy.typing as npt

from .config import config
from .errors import DimensionMismatch, EndpointDiagonalMismatch, ValidationError
from .matrixcore import DensityMatrix, ProbabilityVector, probability_vector, relative_entropy_of_coherence
from .szilard import DemonState, WellConfig, final_demon, insertion_probabilities

logger = logging.getLogger(__name__)

ENDPOINT_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class PathNode:
    energies: npt.NDArray[np.float64]
    populations: ProbabilityVector

    @classmethod
    def create(cls, energies, populations) -> "PathNode":
        energies = np.asarray(energies, dtype=float).ravel()
        populations = probability_vector(populations)
        if energies.shape[0] != len(populations):
            raise DimensionMismatch(
                f"{energies.shape[0]} energies for {len(populations)} populations",
                invariant="len(energies) == len(populations)",
            )
        if not np.all(np.isfinite(energies)):
            raise ValidationError("Energies must be finite", invariant="finite energies")
        energies.setflags(write=False)
        return cls(energies, populations)

    @property
    def dim(self) -> int:
        return self.energies.shape[0]


def internal_energy(node: PathNode) -> float:
    """<E> = sum_n P_n E_n."""
    return float(np.dot(node.populations.p, node.energies))


@dataclass(frozen=True, eq=False)
class PathSchedule:
    """Ordered nodes plus optional endpoint density matrices in the energy basis."""
    nodes: tuple[PathNode, ...]
    temperature: float
    rho_initial: Optional[DensityMatrix] = None
    rho_final: Optional[DensityMatrix] = None
    k_b: float = dataclasses.field(default_factory=lambda: config.units.k_b)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if len(self.nodes) < 2:
            raise ValidationError(f"A path needs at least 2 nodes, got {len(self.nodes)}", invariant="nodes >= 2")
        if not self.temperature > 0.0:
            raise ValidationError(
                f"temperature must be positive, got {self.temperature}",
                invariant="T > 0",
                violation=self.temperature,
            )
        d = self.nodes[0].dim
        for i, node in enumerate(self.nodes):
            if node.dim != d:
                raise DimensionMismatch(
                    f"node {i} has {node.dim} levels, node 0 has {d}",
                    invariant="constant level count",
                )
        if (self.rho_initial is None) != (self.rho_final is None):
            raise ValidationError(
                "rho_initial and rho_final must be given together",
                invariant="both endpoints or neither",
            )
        for label, rho, node in (("rho_initial", self.rho_initial, self.nodes[0]),
                                 ("rho_final", self.rho_final, self.nodes[-1])):
            if rho is None:
                continue
            if rho.dim != d:
                raise DimensionMismatch(f"{label} has dim {rho.dim}, path has {d} levels", invariant="endpoint dim")
            mismatch = float(np.max(np.abs(rho.diagonal - node.populations.p)))
            if mismatch > ENDPOINT_TOLERANCE:
                raise EndpointDiagonalMismatch(
                    f"{label} diagonal differs from node populations by {mismatch:.3e}",
                    invariant="diag(rho) == P_n at the endpoint",
                    violation=mismatch,
                )

    @classmethod
    def from_arrays(cls, energies, populations, temperature: float, rho_initial=None, rho_final=None) -> "PathSchedule":
        """Build from (steps + 1, d) arrays of energies and populations."""
        energies = np.atleast_2d(np.asarray(energies, dtype=float))
        populations = np.atleast_2d(np.asarray(populations, dtype=float))
        if energies.shape != populations.shape:
            raise DimensionMismatch(
                f"energies {energies.shape} vs populations {populations.shape}",
                invariant="matching schedule shapes",
            )
        nodes = tuple(PathNode.create(e, p) for e, p in zip(energies, populations))
        return cls(nodes, temperature, rho_initial, rho_final)

    @property
    def dim(self) -> int:
        return self.nodes[0].dim

    @property
    def has_endpoints(self) -> bool:
        return self.rho_initial is not None

    def energies(self) -> np.ndarray:
        return np.stack([node.energies for node in self.nodes])

    def populations(self) -> np.ndarray:
        return np.stack([node.populations.p for node in self.nodes])

    def reversed(self) -> "PathSchedule":
        return dataclasses.replace(
            self,
            nodes=tuple(reversed(self.nodes)),
            rho_initial=self.rho_final,
            rho_final=self.rho_initial,
        )


@dataclass(frozen=True)
class PathReport:
    delta_E: float
    Q_incoh: float
    Q_coh: float
    Q: float
    W_incoh: float
    W_coh: float
    W: float
    delta_C_r: float
    first_law_residual: float
    endpoints_absent: bool

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def incoherent_heat(path: PathSchedule) -> float:
    """sum over steps of ((E + E') / 2) . (P' - P)."""
    E, P = path.energies(), path.populations()
    per_step = np.sum(0.5 * (E[1:] + E[:-1]) * (P[1:] - P[:-1]), axis=1)
    return float(sum(per_step.tolist()))


def incoherent_work(path: PathSchedule) -> float:
    """-sum over steps of ((P + P') / 2) . (E' - E)."""
    E, P = path.energies(), path.populations()
    per_step = np.sum(0.5 * (P[1:] + P[:-1]) * (E[1:] - E[:-1]), axis=1)
    return -float(sum(per_step.tolist()))


def path_report(path: PathSchedule) -> PathReport:
    """
    Heat and work along a path, split into incoherent and coherent parts.

    Without endpoint states the coherent parts are zero and the report is flagged
    endpoints_absent.
    """
    delta_E = internal_energy(path.nodes[-1]) - internal_energy(path.nodes[0])
    q_incoh = incoherent_heat(path)
    w_incoh = incoherent_work(path)
    if path.has_endpoints:
        delta_c_r = relative_entropy_of_coherence(path.rho_initial) - relative_entropy_of_coherence(path.rho_final)
    else:
        delta_c_r = 0.0
    coherent = path.k_b * path.temperature * delta_c_r
    q = q_incoh + coherent
    w = w_incoh + coherent
    residual = delta_E + w - q
    scale = abs(delta_E) + abs(w) + abs(q) + 1.0
    if abs(residual) > 1e-12 * scale:
        logger.warning(f"First-law residual {residual:.3e} above 1e-12 x {scale:.3g}")
    return PathReport(
        delta_E=delta_E,
        Q_incoh=q_incoh,
        Q_coh=coherent,
        Q=q,
        W_incoh=w_incoh,
        W_coh=coherent,
        W=w,
        delta_C_r=delta_c_r,
        first_law_residual=residual,
        endpoints_absent=not path.has_endpoints,
    )


def schedule_from_cycle(cfg: WellConfig, d: DemonState) -> PathSchedule:
    """
    The demon's side of a Szilard cycle as a two-node path.

    Spectrum (E_g, E_e) is static; populations and endpoint states come from the demon
    before and after the cycle, with P_R from the insertion position.
    """
    P_L, P_R = insertion_probabilities(cfg)
    d_final = final_demon(d, P_L, P_R)
    spectrum = [cfg.E_g, cfg.E_e]
    nodes = (
        PathNode.create(spectrum, [d.p_g, d.p_e]),
        PathNode.create(spectrum, [d_final.p_g, d_final.p_e]),
    )
    return PathSchedule(nodes, cfg.T, d.density(), d_final.density(), k_b=cfg.k_b)
