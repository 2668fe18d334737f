"""
Run configuration and schedule files

Both are strict JSON: unknown keys and wrong types are rejected with the offending
field path and, where it can be found, the line it sits on.
"""

import json
import logging
import math
import re
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

from .config import config
from .errors import ConfigError, DimensionMismatch, InvalidSimplex, ValidationError
from .ihe import IheConfig
from .matrixcore import DensityMatrix
from .pathtools import PathNode, PathSchedule
from .szilard import DemonState, WellConfig, thermal_demon

logger = logging.getLogger(__name__)


def _line_of(text: Optional[str], key: str) -> Optional[int]:
    """1-based line of the first occurrence of "key" in the source text."""
    if not text:
        return None
    match = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return text.count("\n", 0, match.start()) + 1 if match else None


def _load_json(text: str, what: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{what} is not valid JSON: {e.msg}", field="", line=e.lineno) from e


def parse_grid(spec) -> list[float]:
    """
    Grid from "START:STOP:STEP" (STOP included when on the grid) or an explicit list.

    Values are rounded to 12 decimals so decimal steps print cleanly.
    """
    if isinstance(spec, (list, tuple)):
        return [float(x) for x in spec]
    parts = str(spec).split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid {spec!r} is not START:STOP:STEP", field="grid")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError as e:
        raise ConfigError(f"grid {spec!r} has a non-numeric part", field="grid") from e
    if step <= 0.0 or stop < start:
        raise ConfigError(f"grid {spec!r} needs STEP > 0 and STOP >= START", field="grid")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def _check_type(value: Any, kind: str, path: str, text: Optional[str]) -> Any:
    """Coerce a JSON value to its declared kind or raise ConfigError."""
    key = path.rsplit(".", 1)[-1]

    def fail(expected: str):
        raise ConfigError(f"{path} must be {expected}, got {value!r}", field=path, line=_line_of(text, key))

    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            fail("a number")
        return float(value)
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            fail("an integer")
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            fail("true or false")
        return value
    if kind == "str":
        if not isinstance(value, str):
            fail("a string")
        return value
    if kind == "floats":
        if not isinstance(value, list) or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in value):
            fail("a list of numbers")
        return [float(x) for x in value]
    if kind == "grid":
        if isinstance(value, str):
            try:
                return parse_grid(value)
            except ConfigError as e:
                raise ConfigError(str(e), field=path, line=_line_of(text, key)) from e
        return _check_type(value, "floats", path, text)
    if kind == "object":
        if not isinstance(value, dict):
            fail("an object")
        return value
    raise AssertionError(f"unknown kind {kind}")


def _reject_unknown(data: dict, allowed, prefix: str, text: Optional[str]) -> None:
    for key in data:
        if key not in allowed:
            path = f"{prefix}{key}"
            raise ConfigError(f"unknown key {path!r}", field=path, line=_line_of(text, key))


def _check_seed(seed: int, line: Optional[int] = None) -> None:
    """Seeds feed numpy SeedSequence, which takes unsigned 64-bit integers."""
    if not 0 <= seed < 2**64:
        raise ConfigError(f"seed must be in [0, 2**64), got {seed}", field="seed", line=line)


@dataclass
class IheSection:
    """IHE parameters as they appear under "ihe" in a run config."""
    d_M: int = 2
    d_S: int = 2
    d_R: int = 2
    T: float = 1.0
    H_S_initial: Optional[list[float]] = None
    H_S_final: Optional[list[float]] = None
    H_R: Optional[list[float]] = None
    memory_initial: Optional[dict] = None
    diagonal_preserving: bool = False

    KINDS = {
        "d_M": "int", "d_S": "int", "d_R": "int", "T": "float",
        "H_S_initial": "floats", "H_S_final": "floats", "H_R": "floats",
        "memory_initial": "object", "diagonal_preserving": "bool",
    }

    @classmethod
    def from_dict(cls, data: dict, text: Optional[str] = None) -> "IheSection":
        _reject_unknown(data, cls.KINDS, "ihe.", text)
        values = {key: _check_type(value, cls.KINDS[key], f"ihe.{key}", text) for key, value in data.items()}
        return cls(**values)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class RunConfig:
    """Everything one CLI invocation needs. Flags override file values of the same name."""
    L: float = 1.0
    l: float = 0.5
    T: float = 1.0
    T_D: float = 0.5
    delta: float = 0.5
    E_g: float = 0.0
    n_max: Optional[int] = None
    tail_eps: Optional[float] = None
    factors: list[float] = field(default_factory=lambda: [0.0])
    phase: float = 0.0
    p_r: Optional[float] = None
    pr_grid: Optional[list[float]] = None
    l_grid: Optional[list[float]] = None
    l_g: Optional[float] = None
    l_e: Optional[float] = None
    oracle: bool = False
    ihe: IheSection = field(default_factory=IheSection)
    schedule: Optional[str] = None
    out: Optional[str] = None
    seed: int = 0
    trials: Optional[int] = None
    workers: Optional[int] = None
    tolerances: dict[str, float] = field(default_factory=dict)

    KINDS = {
        "L": "float", "l": "float", "T": "float", "T_D": "float", "delta": "float", "E_g": "float",
        "n_max": "int", "tail_eps": "float", "factors": "floats", "phase": "float", "p_r": "float",
        "pr_grid": "grid", "l_grid": "grid", "l_g": "float", "l_e": "float", "oracle": "bool",
        "ihe": "object", "schedule": "str", "out": "str", "seed": "int", "trials": "int",
        "workers": "int", "tolerances": "object",
    }
    TOLERANCE_KEYS = ("herm", "trace", "psd", "eig", "numerical_slack")

    def __post_init__(self):
        _check_seed(self.seed)

    @classmethod
    def from_dict(cls, data: dict, text: Optional[str] = None) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("run config must be a JSON object", field="")
        _reject_unknown(data, cls.KINDS, "", text)
        values = {}
        for key, value in data.items():
            value = _check_type(value, cls.KINDS[key], key, text)
            if key == "ihe":
                value = IheSection.from_dict(value, text)
            elif key == "seed":
                _check_seed(value, _line_of(text, key))
            elif key == "tolerances":
                _reject_unknown(value, cls.TOLERANCE_KEYS, "tolerances.", text)
                value = {k: _check_type(v, "float", f"tolerances.{k}", text) for k, v in value.items()}
            values[key] = value
        return cls(**values)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(_load_json(text, "run config"), text)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e.strerror}", field="config") from e
        return cls.from_json(text)

    def with_overrides(self, **overrides) -> "RunConfig":
        """Copy with every non-None override applied."""
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data.update({k: v for k, v in overrides.items() if v is not None})
        return RunConfig(**data)

    def apply_tolerances(self) -> None:
        """Push tolerance overrides into the global config."""
        for key, value in self.tolerances.items():
            if not value > 0:
                raise ConfigError(f"tolerances.{key} must be positive, got {value}", field=f"tolerances.{key}")
            setattr(config.tolerances, key, value)
        if self.workers is not None:
            config.monte_carlo.workers = self.workers

    def well_config(self, **changes) -> WellConfig:
        params = dict(L=self.L, l=self.l, T=self.T, T_D=self.T_D, delta=self.delta, E_g=self.E_g)
        if self.n_max is not None:
            params["n_max"] = self.n_max
        if self.tail_eps is not None:
            params["tail_eps"] = self.tail_eps
        params.update(changes)
        return WellConfig(**params)

    def demons(self, well: WellConfig) -> list[tuple[float, DemonState]]:
        """(factor, thermal demon) for every configured coherence factor, in order."""
        if not self.factors:
            raise ConfigError("factors must not be empty", field="factors")
        return [(factor, thermal_demon(well, factor, self.phase)) for factor in self.factors]

    def ihe_config(self) -> IheConfig:
        section = self.ihe
        memory = None
        if section.memory_initial is not None:
            try:
                memory = DensityMatrix.from_dict(section.memory_initial)
            except (KeyError, TypeError, ValueError) as e:
                raise ConfigError(f"ihe.memory_initial is malformed: {e}", field="ihe.memory_initial") from e
        return IheConfig(
            d_M=section.d_M,
            d_S=section.d_S,
            d_R=section.d_R,
            T=section.T,
            H_S_initial=None if section.H_S_initial is None else tuple(section.H_S_initial),
            H_S_final=None if section.H_S_final is None else tuple(section.H_S_final),
            H_R=None if section.H_R is None else tuple(section.H_R),
            memory_initial=memory,
            trials=self.trials if self.trials is not None else config.monte_carlo.trials,
            seed=self.seed,
        )

    def to_dict(self) -> dict:
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data["ihe"] = self.ihe.to_dict()
        return data


# =============================================================================
# SCHEDULE FILES
# =============================================================================

SCHEDULE_KEYS = ("temperature", "nodes", "rho_initial", "rho_final")


def parse_schedule(data: dict, text: Optional[str] = None) -> PathSchedule:
    """
    Build a PathSchedule from its JSON form.

    {"temperature": T, "nodes": [{"energies": [...], "populations": [...]}, ...],
     "rho_initial": {"re": [[...]], "im": [[...]]}, "rho_final": {...}}
    """
    if not isinstance(data, dict):
        raise ConfigError("schedule must be a JSON object", field="")
    _reject_unknown(data, SCHEDULE_KEYS, "", text)
    for key in ("temperature", "nodes"):
        if key not in data:
            raise ConfigError(f"schedule is missing {key!r}", field=key)
    temperature = _check_type(data["temperature"], "float", "temperature", text)
    raw_nodes = data["nodes"]
    if not isinstance(raw_nodes, list):
        raise ConfigError("nodes must be a list", field="nodes", line=_line_of(text, "nodes"))

    nodes = []
    for i, raw in enumerate(raw_nodes):
        prefix = f"nodes[{i}]"
        if not isinstance(raw, dict):
            raise ConfigError(f"{prefix} must be an object", field=prefix)
        _reject_unknown(raw, ("energies", "populations"), f"{prefix}.", text)
        for key in ("energies", "populations"):
            if key not in raw:
                raise ConfigError(f"{prefix} is missing {key!r}", field=f"{prefix}.{key}")
        energies = _check_type(raw["energies"], "floats", f"{prefix}.energies", text)
        populations = _check_type(raw["populations"], "floats", f"{prefix}.populations", text)
        try:
            nodes.append(PathNode.create(energies, populations))
        except (InvalidSimplex, DimensionMismatch) as e:
            raise ConfigError(f"{prefix}: {e}", field=f"{prefix}.populations") from e
        except ValidationError as e:
            raise ConfigError(f"{prefix}: {e}", field=f"{prefix}.energies") from e

    endpoints = {}
    for key in ("rho_initial", "rho_final"):
        if data.get(key) is None:
            endpoints[key] = None
            continue
        raw = _check_type(data[key], "object", key, text)
        _reject_unknown(raw, ("re", "im"), f"{key}.", text)
        if "re" not in raw:
            raise ConfigError(f"{key} is missing 're'", field=f"{key}.re", line=_line_of(text, key))
        try:
            endpoints[key] = DensityMatrix.from_dict(raw)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{key} is malformed: {e}", field=key, line=_line_of(text, key)) from e

    return PathSchedule(tuple(nodes), temperature, endpoints["rho_initial"], endpoints["rho_final"])


def load_schedule(path: str | Path) -> PathSchedule:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read schedule {path}: {e.strerror}", field="schedule") from e
    return parse_schedule(_load_json(text, "schedule"), text)
