"""
Command-line interface for coherent-szilard

Five subcommands: cycle, sweep, critical, ihe and path. Output is deterministic JSON
(CSV for sweep) on stdout or --out; errors are one JSON line on stderr with exit code
2 for bad input and 3 for numerical failure.
"""

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .errors import CoherenceError, ConfigError, DegenerateCycle, NoSignChange, ValidationError
from .ihe import fuzz
from .pathtools import path_report
from .runconfig import RunConfig, load_schedule, parse_grid
from .szilard import (
    classical_probabilities,
    critical_probability,
    cycle_at,
    cycle_report,
    demon_temperature,
    free_energy_work,
    insertion_probabilities,
    oracle_run_cycle,
    zero_work_probability,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

SWEEP_COLUMNS = ("p_r", "factor", "eta", "eta_carnot", "w_tot", "q_tot", "q_coh", "delta_cr", "delta_sc", "de_tot")
DEFAULT_PR_GRID = "0.01:0.99:0.01"


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors become ConfigError."""

    def error(self, message: str):
        raise ConfigError(message, field="argv")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from e


def _grid(text: str) -> list[float]:
    try:
        return parse_grid(text)
    except ConfigError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run config")
    common.add_argument("--out", help="Output file (default: stdout)")
    common.add_argument("--seed", type=int, help="RNG seed (default: 0)")
    common.add_argument("--oracle", action="store_true", default=None, help="Cross-check cycles with the matrix oracle")
    common.add_argument("--nmax", dest="n_max", type=int, help="Level-sum truncation order")
    common.add_argument("--tail-eps", dest="tail_eps", type=float, help="Relative tail bound for level sums")
    common.add_argument("--pr-grid", dest="pr_grid", type=_grid, help="P_R grid START:STOP:STEP")
    common.add_argument("--l-grid", dest="l_grid", type=_grid, help="Insertion-position grid START:STOP:STEP")
    common.add_argument("--factors", type=_float_list, help="Coherence factors, comma separated")
    common.add_argument("--phase", type=float, help="Phase of the demon coherence (radians)")
    common.add_argument("--trials", type=int, help="IHE fuzzing trials")
    common.add_argument("--workers", type=int, help="Worker threads for fuzzing")
    common.add_argument("--L", dest="L", type=float, help="Box length")
    common.add_argument("--l", dest="l", type=float, help="Insertion position")
    common.add_argument("--T", dest="T", type=float, help="System bath temperature")
    common.add_argument("--T-D", dest="T_D", type=float, help="Demon temperature")
    common.add_argument("--delta", type=float, help="Demon level gap")
    common.add_argument("--E-g", dest="E_g", type=float, help="Demon ground-level energy")
    common.add_argument("--p-r", dest="p_r", type=float, help="Evaluate the cycle at this P_R")
    common.add_argument("--l-g", dest="l_g", type=float, help="Oracle expansion endpoint, g branch")
    common.add_argument("--l-e", dest="l_e", type=float, help="Oracle expansion endpoint, e branch")
    common.add_argument("--schedule", help="Schedule file for the path command")
    common.add_argument("--d-M", dest="d_M", type=int, help="IHE memory dimension")
    common.add_argument("--d-S", dest="d_S", type=int, help="IHE system dimension")
    common.add_argument("--d-R", dest="d_R", type=int, help="IHE reservoir dimension")
    common.add_argument("--ihe-T", dest="ihe_T", type=float, help="IHE bath temperature")
    common.add_argument(
        "--diagonal-preserving", action="store_true", default=None,
        help="Restrict IHE feedback to level-population-preserving unitaries",
    )
    common.add_argument("--tol-herm", dest="tol_herm", type=float, help="Hermiticity tolerance")
    common.add_argument("--tol-trace", dest="tol_trace", type=float, help="Unit-trace tolerance")
    common.add_argument("--tol-psd", dest="tol_psd", type=float, help="Positivity tolerance")
    common.add_argument("--tol-eig", dest="tol_eig", type=float, help="Eigenvalue cutoff for entropies")
    common.add_argument("--numerical-slack", dest="tol_numerical_slack", type=float, help="Inequality tolerance")
    common.add_argument("-v", "--verbose", action="store_true", help="Debug logging on stderr")

    parser = _Parser(
        prog="coherent-szilard",
        description="Coherence-assisted quantum Szilard engine simulator",
        epilog="Example: coherent-szilard sweep --factors 0,0.7,1 --pr-grid 0.01:0.99:0.01",
    )
    subparsers = parser.add_subparsers(dest="command", parser_class=_Parser)
    subparsers.add_parser("cycle", parents=[common], help="Closed-form cycle report")
    subparsers.add_parser("sweep", parents=[common], help="Efficiency sweep as CSV")
    subparsers.add_parser("critical", parents=[common], help="Carnot-crossing and zero-work probabilities")
    subparsers.add_parser("ihe", parents=[common], help="Fuzz the information heat engine bound")
    subparsers.add_parser("path", parents=[common], help="First-law split along a schedule file")
    return parser


OVERRIDE_KEYS = (
    "out", "seed", "oracle", "n_max", "tail_eps", "pr_grid", "l_grid", "factors", "phase", "trials",
    "workers", "L", "l", "T", "T_D", "delta", "E_g", "p_r", "l_g", "l_e", "schedule",
)


IHE_FLAGS = {"d_M": "d_M", "d_S": "d_S", "d_R": "d_R", "ihe_T": "T", "diagonal_preserving": "diagonal_preserving"}


def load_run_config(args: argparse.Namespace) -> RunConfig:
    run = RunConfig.load(args.config) if args.config else RunConfig()
    ihe = {key: getattr(args, dest) for dest, key in IHE_FLAGS.items() if getattr(args, dest) is not None}
    tolerances = {
        key: getattr(args, f"tol_{key}") for key in RunConfig.TOLERANCE_KEYS if getattr(args, f"tol_{key}") is not None
    }
    return run.with_overrides(
        **{key: getattr(args, key) for key in OVERRIDE_KEYS},
        ihe=replace(run.ihe, **ihe),
        tolerances={**run.tolerances, **tolerances},
    )


# =============================================================================
# OUTPUT
# =============================================================================

def _jsonable(obj: Any) -> Any:
    """Plain JSON types; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _csv_value(value: Optional[float]) -> str:
    if value is None or not math.isfinite(value):
        return ""
    return repr(float(value))


# =============================================================================
# COMMANDS
# =============================================================================

def cmd_cycle(run: RunConfig) -> str:
    """Cycle report for every configured coherence factor."""
    well = run.well_config()
    p_l_classical, p_r_classical = classical_probabilities(well)
    p_l, p_r = insertion_probabilities(well)
    if run.p_r is not None:
        p_l, p_r = 1.0 - run.p_r, run.p_r

    cycles = []
    for factor, demon in run.demons(well):
        report = cycle_report(well, demon, p_r)
        entry = {
            "factor": factor,
            "phase": run.phase,
            "demon_initial": demon.to_dict(),
            "demon_temperature": demon_temperature(demon, well.delta, well.k_b),
            "report": report.to_dict(),
            "free_energy_work": free_energy_work(well, demon, p_r),
        }
        if run.oracle:
            oracle = oracle_run_cycle(well, demon, run.l_g, run.l_e)
            entry["oracle"] = oracle.to_dict()
            entry["oracle_max_abs_diff"] = oracle.max_abs_diff
        cycles.append(entry)

    return dumps({
        "well": well.to_dict(),
        "p_l": p_l,
        "p_r": p_r,
        "p_l_classical": p_l_classical,
        "p_r_classical": p_r_classical,
        "cycles": cycles,
    })


def cmd_sweep(run: RunConfig) -> str:
    """CSV rows, factor-major, grid-minor."""
    base = run.well_config()
    if run.l_grid is not None:
        points = []
        for l in run.l_grid:
            well = run.well_config(l=l)
            points.append((insertion_probabilities(well)[1], well))
    else:
        grid = run.pr_grid if run.pr_grid is not None else parse_grid(DEFAULT_PR_GRID)
        points = [(p_r, base) for p_r in grid]

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for factor, demon in run.demons(base):
        for p_r, well in points:
            r = cycle_at(p_r, well, demon, quantum_limit=False)
            writer.writerow([
                _csv_value(p_r), _csv_value(factor), _csv_value(r.eta), _csv_value(r.eta_carnot),
                _csv_value(r.w_tot), _csv_value(r.q_tot), _csv_value(r.q_coh), _csv_value(r.delta_c_r),
                _csv_value(r.delta_s_c), _csv_value(r.delta_e_tot),
            ])
    logger.debug(f"Sweep wrote {len(points) * len(run.factors)} rows")
    return buffer.getvalue()


def cmd_critical(run: RunConfig) -> str:
    """Both root-finds per factor; a missing root is null with its reason."""
    well = run.well_config()
    results = []
    for factor, demon in run.demons(well):
        entry: dict[str, Any] = {"factor": factor, "eta_carnot": well.eta_carnot}
        for key, solver in (("p_r_cri", critical_probability), ("p_r_zero", zero_work_probability)):
            try:
                entry[key] = solver(well, demon)
                entry[f"{key}_reason"] = None
            except NoSignChange:
                entry[key] = None
                entry[f"{key}_reason"] = "NoSignChange"
        results.append(entry)
    return dumps({"well": well.to_dict(), "results": results})


def cmd_ihe(run: RunConfig) -> str:
    cfg = run.ihe_config()
    summary = fuzz(cfg, diagonal_preserving=run.ihe.diagonal_preserving)
    return dumps({
        "config": cfg.to_dict(),
        "diagonal_preserving": run.ihe.diagonal_preserving,
        "summary": summary.to_dict(),
    })


def cmd_path(run: RunConfig) -> str:
    if not run.schedule:
        raise ConfigError("path needs a schedule file (--schedule or \"schedule\")", field="schedule")
    schedule = load_schedule(run.schedule)
    report = path_report(schedule)
    return dumps({
        "temperature": schedule.temperature,
        "steps": len(schedule.nodes) - 1,
        "levels": schedule.dim,
        "report": report.to_dict(),
    })


COMMANDS = {
    "cycle": cmd_cycle,
    "sweep": cmd_sweep,
    "critical": cmd_critical,
    "ihe": cmd_ihe,
    "path": cmd_path,
}


def _emit_error(error: CoherenceError) -> int:
    data = error.to_dict()
    if isinstance(error, DegenerateCycle) and error.report is not None:
        data["report"] = error.report.to_dict()
    print(json.dumps(_jsonable(data), sort_keys=True), file=sys.stderr)
    return EXIT_VALIDATION if isinstance(error, ValidationError) else EXIT_NUMERICAL


def main(argv: Optional[list[str]] = None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise ConfigError("a subcommand is required: " + ", ".join(COMMANDS), field="command")

        logging.basicConfig(
            level=logging.DEBUG if args.verbose else logging.WARNING,
            stream=sys.stderr,
            format="%(levelname)s %(name)s: %(message)s",
        )
        run = load_run_config(args)
        run.apply_tolerances()
        payload = COMMANDS[args.command](run)
        if run.out:
            try:
                Path(run.out).write_text(payload)
            except OSError as e:
                raise ConfigError(f"cannot write {run.out}: {e.strerror}", field="out") from e
        else:
            sys.stdout.write(payload)
    except CoherenceError as e:
        return _emit_error(e)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
