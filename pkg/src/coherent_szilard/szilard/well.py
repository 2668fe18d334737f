"""
Particle-in-a-box thermodynamics for the Szilard engine

Energy levels, truncated partition functions (computed in log space so narrow boxes and
cold baths never underflow), insertion probabilities, the gas force on the wall and the
mechanical equilibrium of a wall pushed from both sides.

Reduced units: hbar^2 pi^2 / 2m = level_unit and k_B = k_b, both 1 by default.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize
from scipy.special import expit, log_ndtr, logsumexp, softmax

from ..config import config
from ..errors import NoConvergence, NoSignChange, TruncationInsufficient, ValidationError

logger = logging.getLogger(__name__)

# Innermost wall position tried by the equilibrium root-find, as a fraction of L
WALL_EDGE = 1e-9


@dataclass(frozen=True)
class WellConfig:
    """Box, baths, demon gap and series truncation for one engine."""
    L: float = 1.0
    l: float = 0.5
    T: float = 1.0
    T_D: float = 0.5
    delta: float = 0.5
    E_g: float = 0.0
    n_max: int = field(default_factory=lambda: config.truncation.n_max)
    tail_eps: float = field(default_factory=lambda: config.truncation.tail_eps)
    k_b: float = field(default_factory=lambda: config.units.k_b)
    level_unit: float = field(default_factory=lambda: config.units.level_unit)

    def __post_init__(self):
        checks = [
            (0.0 < self.l < self.L, "0 < l < L", self.l),
            (self.T > 0.0, "T > 0", self.T),
            (self.T_D > 0.0, "T_D > 0", self.T_D),
            (self.delta > 0.0, "delta > 0", self.delta),
            (self.n_max >= 1, "n_max >= 1", self.n_max),
            (self.tail_eps > 0.0, "tail_eps > 0", self.tail_eps),
            (self.k_b > 0.0, "k_b > 0", self.k_b),
            (self.level_unit > 0.0, "level_unit > 0", self.level_unit),
        ]
        for ok, invariant, value in checks:
            if not ok:
                raise ValidationError(
                    f"WellConfig violates {invariant} (got {value!r})",
                    invariant=invariant,
                    violation=float(value),
                )

    @property
    def E_e(self) -> float:
        return self.E_g + self.delta

    @property
    def eta_carnot(self) -> float:
        return 1.0 - self.T_D / self.T

    def replace(self, **changes) -> "WellConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def energy_level(n: int, width: float, cfg: WellConfig | None = None) -> float:
    """E_n(x) = level_unit * n^2 / x^2."""
    if n < 1 or width <= 0.0:
        raise ValidationError(f"energy_level needs n >= 1 and width > 0, got n={n}, width={width}",
                              invariant="n >= 1, width > 0")
    unit = cfg.level_unit if cfg is not None else config.units.level_unit
    return unit * n * n / (width * width)


def _log_terms(width: float, T: float, cfg: WellConfig, n_max: int) -> np.ndarray:
    """-beta E_n(width) for n = 1..n_max."""
    n = np.arange(1, n_max + 1, dtype=float)
    return -(cfg.level_unit / (cfg.k_b * T * width * width)) * n * n


def truncation_order(width: float, T: float, cfg: WellConfig) -> int:
    """
    Number of levels N kept in the partition sum.

    N is the smallest order at which the Gaussian integral bound on the discarded tail
    falls below tail_eps times the partial sum.

    Raises:
        TruncationInsufficient: n_max too small for tail_eps at this (width, T)
    """
    if width <= 0.0 or T <= 0.0:
        raise ValidationError(f"width and T must be positive, got {width}, {T}", invariant="width, T > 0")
    log_terms = _log_terms(width, T, cfg, cfg.n_max)
    running = np.logaddexp.accumulate(log_terms)
    log_eps = math.log(cfg.tail_eps)

    # Tail integral of exp(-a u^2) from N to infinity, a = beta * level_unit / width^2
    a = -log_terms[0]
    orders = np.arange(1, cfg.n_max + 1, dtype=float)
    log_tails = 0.5 * math.log(math.pi / a) + log_ndtr(-math.sqrt(2.0 * a) * orders)
    reached = np.nonzero(log_tails < log_eps + running)[0]
    if not reached.size:
        raise TruncationInsufficient(
            f"n_max={cfg.n_max} cannot reach tail_eps={cfg.tail_eps:.1e} at width={width}, T={T}",
            invariant="tail integral < tail_eps * Z",
            violation=math.exp(float(log_tails[-1] - running[-1])),
        )
    N = int(reached[0]) + 1
    logger.debug(f"Partition sum at width={width:.6g}, T={T:.6g} truncated at N={N}")
    return N


def log_partition_function(width: float, T: float, cfg: WellConfig) -> float:
    """ln Z(x) over the truncated level sum."""
    N = truncation_order(width, T, cfg)
    return float(logsumexp(_log_terms(width, T, cfg, N)))


def partition_function(width: float, T: float, cfg: WellConfig) -> float:
    """Z(x) = sum_n exp(-beta E_n(x)), truncated as in `truncation_order`."""
    return math.exp(log_partition_function(width, T, cfg))


def insertion_probabilities(cfg: WellConfig) -> tuple[float, float]:
    """(P_L, P_R) with P_L = Z(l) / [Z(l) + Z(L - l)]."""
    log_left = log_partition_function(cfg.l, cfg.T, cfg)
    log_right = log_partition_function(cfg.L - cfg.l, cfg.T, cfg)
    return float(expit(log_left - log_right)), float(expit(log_right - log_left))


def classical_probabilities(cfg: WellConfig) -> tuple[float, float]:
    """(l/L, (L - l)/L), the volume-fraction probabilities of a classical particle."""
    return cfg.l / cfg.L, (cfg.L - cfg.l) / cfg.L


def wall_force(width: float, T: float, cfg: WellConfig) -> float:
    """
    Force of the gas on a wall bounding a box of the given width.

    k_B T d ln Z / dx = sum_n P_n(x) * 2 level_unit n^2 / x^3, term by term.
    """
    N = truncation_order(width, T, cfg)
    weights = softmax(_log_terms(width, T, cfg, N))
    n = np.arange(1, N + 1, dtype=float)
    return float(np.sum(weights * n * n) * 2.0 * cfg.level_unit / width**3)


def equilibrium_wall_position(cfg: WellConfig, branch_weights: tuple[float, float]) -> float:
    """
    Wall position where the weighted gas forces from both sides balance.

    Solves w_L f(x) = w_R f(L - x) by bracketing bisection on (0, L).

    Args:
        cfg: Engine configuration (L, T and truncation are used)
        branch_weights: (w_L, w_R), positive and summing to one

    Raises:
        NoSignChange: the root lies outside the searchable bracket
    """
    w_left, w_right = branch_weights
    if w_left <= 0.0 or w_right <= 0.0 or abs(w_left + w_right - 1.0) > 1e-12:
        raise ValidationError(
            f"branch weights must be positive and sum to 1, got {branch_weights}",
            invariant="w_L, w_R > 0, w_L + w_R = 1",
        )
    if w_left == w_right:
        return cfg.L / 2.0

    L, T = cfg.L, cfg.T

    def imbalance(x: float) -> float:
        return w_left * wall_force(x, T, cfg) - w_right * wall_force(L - x, T, cfg)

    lo, hi = L * WALL_EDGE, L * (1.0 - WALL_EDGE)
    f_lo, f_hi = imbalance(lo), imbalance(hi)
    if not (f_lo > 0.0 > f_hi):
        raise NoSignChange(
            f"No force balance in ({lo:.3g}, {hi:.3g}) for weights {branch_weights}",
            invariant="w_L f(x) - w_R f(L - x) changes sign",
        )

    rf = config.root_find
    try:
        root = scipy.optimize.bisect(imbalance, lo, hi, xtol=rf.xtol, rtol=rf.rtol, maxiter=rf.max_iter)
    except RuntimeError as e:
        raise NoConvergence(f"Wall equilibrium bisection failed: {e}", invariant="bisection converged") from e

    scale = max(w_left * wall_force(root, T, cfg), w_right * wall_force(L - root, T, cfg))
    residual = abs(imbalance(root))
    if residual > 1e-10 * scale:
        raise NoConvergence(
            f"Force residual {residual:.3e} at x={root:.12g}",
            invariant="|w_L f - w_R f| <= 1e-10 max force",
            violation=residual / scale,
        )
    logger.debug(f"Wall equilibrium for weights {branch_weights} at x={root:.12g}")
    return root
