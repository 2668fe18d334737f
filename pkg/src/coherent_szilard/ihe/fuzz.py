"""
Monte-Carlo harness for the information heat engine bound

Each trial draws its protocol from its own substream of (seed, trial index), so the
summary is identical whatever the worker count.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..config import config
from ..errors import BoundViolation
from .protocol import IheConfig, IheProtocol, IheTrialReport, run_protocol

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NearSaturation:
    trial: int
    slack: float
    protocol: IheProtocol

    def to_dict(self) -> dict:
        return {"trial": self.trial, "slack": self.slack, "protocol": self.protocol.to_dict()}


@dataclass
class FuzzSummary:
    """Reduced view of a fuzzing run."""
    trials: int
    min_slack: float = float("inf")
    min_slack_trial: int = -1
    min_slack_protocol: Optional[IheProtocol] = None
    min_chain_residuals: dict[str, float] = field(default_factory=dict)
    skipped_checks: dict[str, int] = field(default_factory=dict)
    near_saturation: list[NearSaturation] = field(default_factory=list)
    coherence_only_count: int = 0
    coherence_only_max_excess: Optional[float] = None

    def to_dict(self, include_protocols: bool = True) -> dict:
        data = {
            "trials": self.trials,
            "min_slack": self.min_slack,
            "min_slack_trial": self.min_slack_trial,
            "min_chain_residuals": dict(sorted(self.min_chain_residuals.items())),
            "skipped_checks": dict(sorted(self.skipped_checks.items())),
            "near_saturation_count": len(self.near_saturation),
            "coherence_only_filtered": self.coherence_only_count,
            "coherence_only_max_excess": self.coherence_only_max_excess,
        }
        if include_protocols:
            data["min_slack_protocol"] = self.min_slack_protocol.to_dict() if self.min_slack_protocol else None
            data["near_saturation_protocols"] = [n.to_dict() for n in self.near_saturation]
        return data


def trial_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for one trial."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def run_trial(cfg: IheConfig, index: int, diagonal_preserving: bool = False) -> tuple[IheProtocol, IheTrialReport]:
    protocol = IheProtocol.sample(cfg, trial_rng(cfg.seed, index), diagonal_preserving)
    return protocol, run_protocol(cfg, protocol)


def _absorb(summary: FuzzSummary, index: int, protocol: IheProtocol, report: IheTrialReport, cfg: IheConfig) -> None:
    mc = config.monte_carlo
    if report.slack < summary.min_slack:
        summary.min_slack = report.slack
        summary.min_slack_trial = index
        summary.min_slack_protocol = protocol

    for name, check in report.chain_checks.items():
        if check.skipped:
            summary.skipped_checks[name] = summary.skipped_checks.get(name, 0) + 1
            continue
        current = summary.min_chain_residuals.get(name, float("inf"))
        summary.min_chain_residuals[name] = min(current, check.residual)

    scale = abs(report.W_ext) + abs(report.bound_rhs) + 1.0
    if report.slack < mc.near_saturation_rel * scale:
        summary.near_saturation.append(NearSaturation(index, report.slack, protocol))

    if abs(report.delta_S_c) < mc.coherence_only_filter:
        # Work beyond the coherence budget alone
        excess = report.W_ext - (-report.delta_F_S + cfg.k_b * cfg.T * report.delta_C_r)
        summary.coherence_only_count += 1
        previous = summary.coherence_only_max_excess
        summary.coherence_only_max_excess = excess if previous is None else max(previous, excess)


def fuzz(
    cfg: IheConfig,
    *,
    diagonal_preserving: bool = False,
    workers: Optional[int] = None,
    raise_on_violation: bool = True,
) -> FuzzSummary:
    """
    Run cfg.trials random protocols and reduce them in trial order.

    Raises:
        BoundViolation: a trial's slack or chain residual is below -numerical_slack
            (first offending trial in index order)
    """
    workers = workers or config.monte_carlo.workers
    tolerance = config.tolerances.numerical_slack
    logger.info(f"Fuzzing {cfg.trials} protocols at dims ({cfg.d_M}, {cfg.d_S}, {cfg.d_R}), seed {cfg.seed}")

    def one(index: int) -> tuple[IheProtocol, IheTrialReport]:
        return run_trial(cfg, index, diagonal_preserving)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(cfg.trials)))
    else:
        results = [one(i) for i in range(cfg.trials)]

    summary = FuzzSummary(trials=cfg.trials)
    for index, (protocol, report) in enumerate(results):
        if raise_on_violation:
            if report.slack < -tolerance:
                raise BoundViolation(
                    f"Trial {index}: W_ext exceeds the bound by {-report.slack:.3e}",
                    invariant="W_ext <= -dF_S + T dS_c + k_B T dC_r",
                    violation=-report.slack,
                    protocol=protocol,
                )
            failed = report.failed_checks()
            if failed:
                check = report.chain_checks[failed[0]]
                raise BoundViolation(
                    f"Trial {index}: chain step {failed[0]} fails with residual {check.residual:.3e}",
                    invariant=failed[0],
                    violation=-check.residual,
                    protocol=protocol,
                )
        _absorb(summary, index, protocol, report, cfg)

    logger.debug(f"Fuzz done: min slack {summary.min_slack:.3e} at trial {summary.min_slack_trial}")
    return summary
