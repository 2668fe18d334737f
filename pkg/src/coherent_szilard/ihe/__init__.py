"""
Information heat engine: random measurement-feedback protocols checked against the
coherence-modified second law.
"""

from .fuzz import FuzzSummary, NearSaturation, fuzz, run_trial, trial_rng
from .protocol import ChainCheck, IheConfig, IheProtocol, IheTrialReport, build_initial, run_protocol

__all__ = [
    "ChainCheck",
    "FuzzSummary",
    "IheConfig",
    "IheProtocol",
    "IheTrialReport",
    "NearSaturation",
    "build_initial",
    "fuzz",
    "run_protocol",
    "run_trial",
    "trial_rng",
]
