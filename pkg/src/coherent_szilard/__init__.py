"""
coherent-szilard: quantum Szilard engine with a coherent Maxwell demon.

Closed-form cycle energetics cross-checked by a brute-force matrix oracle, a Monte-Carlo
verifier for the coherence-modified second law, and first-law accounting along paths.
"""

__version__ = "0.1.0"

from .config import config
from .errors import BoundViolation, CoherenceError, NumericalError, ValidationError
from .ihe import IheConfig, IheProtocol, fuzz, run_protocol
from .matrixcore import DensityMatrix, ProbabilityVector, Tolerances, validate_density
from .pathtools import PathNode, PathSchedule, path_report, schedule_from_cycle
from .szilard import (
    CycleReport,
    DemonState,
    WellConfig,
    critical_probability,
    cycle_report,
    oracle_run_cycle,
    thermal_demon,
    zero_work_probability,
)

__all__ = [
    # Config and errors
    "config",
    "CoherenceError",
    "ValidationError",
    "NumericalError",
    "BoundViolation",
    # Matrix kernel
    "DensityMatrix",
    "ProbabilityVector",
    "Tolerances",
    "validate_density",
    # Szilard engine
    "WellConfig",
    "DemonState",
    "CycleReport",
    "thermal_demon",
    "cycle_report",
    "critical_probability",
    "zero_work_probability",
    "oracle_run_cycle",
    # Information heat engine
    "IheConfig",
    "IheProtocol",
    "run_protocol",
    "fuzz",
    # Paths
    "PathNode",
    "PathSchedule",
    "path_report",
    "schedule_from_cycle",
]
