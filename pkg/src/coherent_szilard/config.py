"""
coherent-szilard configuration

All tolerances, truncation orders, unit constants and Monte-Carlo knobs live here.
Environment variables override defaults so batch runs can be tuned without code changes.
"""

import os
from dataclasses import dataclass, field


@dataclass
class ToleranceConfig:
    """Numerical tolerances for density-matrix validation and inequality checks"""
    herm: float = float(os.getenv("CSZ_HERM_TOL", "1e-10"))
    trace: float = float(os.getenv("CSZ_TRACE_TOL", "1e-10"))
    psd: float = float(os.getenv("CSZ_PSD_TOL", "1e-9"))
    eig: float = float(os.getenv("CSZ_EIG_TOL", "1e-12"))
    numerical_slack: float = float(os.getenv("CSZ_NUMERICAL_SLACK", "1e-9"))


@dataclass
class UnitsConfig:
    """Reduced units: k_B and hbar^2 pi^2 / 2m both default to 1"""
    k_b: float = float(os.getenv("CSZ_K_B", "1.0"))
    level_unit: float = float(os.getenv("CSZ_LEVEL_UNIT", "1.0"))


@dataclass
class TruncationConfig:
    """Level-sum truncation for the particle-in-a-box series"""
    n_max: int = int(os.getenv("CSZ_N_MAX", "50"))
    tail_eps: float = float(os.getenv("CSZ_TAIL_EPS", "1e-12"))
    # Lower clamp on oracle level populations; keeps sector ratios finite after underflow
    population_floor: float = float(os.getenv("CSZ_POPULATION_FLOOR", "1e-250"))


@dataclass
class RootFindConfig:
    """Bracketing bisection settings"""
    max_iter: int = int(os.getenv("CSZ_ROOT_MAX_ITER", "200"))
    xtol: float = float(os.getenv("CSZ_ROOT_XTOL", "1e-15"))
    rtol: float = float(os.getenv("CSZ_ROOT_RTOL", "8.9e-16"))  # scipy floor is 4*eps
    scan_points: int = int(os.getenv("CSZ_ROOT_SCAN_POINTS", "400"))
    edge: float = float(os.getenv("CSZ_ROOT_EDGE", "1e-6"))


@dataclass
class MonteCarloConfig:
    """Information-heat-engine fuzzing"""
    trials: int = int(os.getenv("CSZ_TRIALS", "1000"))
    workers: int = int(os.getenv("CSZ_WORKERS", "1"))
    near_saturation_rel: float = float(os.getenv("CSZ_NEAR_SATURATION", "1e-3"))
    coherence_only_filter: float = float(os.getenv("CSZ_COHERENCE_ONLY_FILTER", "1e-6"))


@dataclass
class Config:
    """Master config, import this"""
    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)
    units: UnitsConfig = field(default_factory=UnitsConfig)
    truncation: TruncationConfig = field(default_factory=TruncationConfig)
    root_find: RootFindConfig = field(default_factory=RootFindConfig)
    monte_carlo: MonteCarloConfig = field(default_factory=MonteCarloConfig)

    # Quick presets
    @classmethod
    def coarse_mode(cls) -> "Config":
        """For exploratory sweeps: shorter level sums, looser tails"""
        cfg = cls()
        cfg.truncation.n_max = 20
        cfg.truncation.tail_eps = 1e-8
        cfg.root_find.scan_points = 100
        return cfg

    @classmethod
    def strict_mode(cls) -> "Config":
        """Regression runs: tighter inequality slack"""
        cfg = cls()
        cfg.tolerances.numerical_slack = 1e-11
        return cfg


# Singleton
config = Config()
