"""
Coherence-assisted Szilard engine: box thermodynamics, demon algebra, closed-form
cycle energetics and a brute-force matrix oracle.
"""

from .cycle import (
    CycleReport,
    critical_probability,
    cycle_at,
    cycle_report,
    efficiency_curve,
    free_energy_work,
    quantum_carnot_limit,
    zero_work_probability,
)
from .demon import (
    DemonState,
    demon_coherence,
    demon_from_bloch,
    demon_temperature,
    final_demon,
    thermal_demon,
)
from .oracle import OracleResult, Stage, TruncatedCycleState, oracle_run_cycle
from .well import (
    WellConfig,
    classical_probabilities,
    energy_level,
    equilibrium_wall_position,
    insertion_probabilities,
    log_partition_function,
    partition_function,
    wall_force,
)

__all__ = [
    "CycleReport",
    "DemonState",
    "OracleResult",
    "Stage",
    "TruncatedCycleState",
    "WellConfig",
    "classical_probabilities",
    "critical_probability",
    "cycle_at",
    "cycle_report",
    "demon_coherence",
    "demon_from_bloch",
    "demon_temperature",
    "efficiency_curve",
    "energy_level",
    "equilibrium_wall_position",
    "final_demon",
    "free_energy_work",
    "insertion_probabilities",
    "log_partition_function",
    "oracle_run_cycle",
    "partition_function",
    "quantum_carnot_limit",
    "thermal_demon",
    "wall_force",
    "zero_work_probability",
]
