"""Experiment configuration (JSON) and deterministic result emission."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .domain import DomainSpec, QuadratureConfig, SpectralField
from .errors import ConfigError
from .evolution import EvolutionConfig, TrajectoryRecord
from .stationary import SolverConfig

DEFAULT_SEED = 42
FORMATS = ("csv", "jsonl")
TRAJECTORY_COLUMNS = ("t", "J", "I", "two_S", "L", "l2", "lp", "seminorm_sq",
                      "singular_mass", "dt")


@dataclass(frozen=True)
class InitialData:
    modes: tuple[tuple[int, float], ...] | None = None
    ground_state_scaled: float | None = None

    def __post_init__(self):
        if (self.modes is None) == (self.ground_state_scaled is None):
            raise ConfigError("initial_data needs exactly one of 'modes' or 'ground_state_scaled'")
        if self.ground_state_scaled is not None and not self.ground_state_scaled > 0:
            raise ConfigError("ground_state_scaled must be positive")

    def as_dict(self) -> dict:
        if self.modes is not None:
            return {"modes": [list(m) for m in self.modes]}
        return {"ground_state_scaled": self.ground_state_scaled}


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    formats: tuple[str, ...] = ("csv",)


@dataclass(frozen=True)
class ExperimentConfig:
    domain: DomainSpec = field(default_factory=DomainSpec)
    initial_data: InitialData = field(default_factory=lambda: InitialData(ground_state_scaled=0.5))
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    seed: int = DEFAULT_SEED

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return dataclasses.replace(self, seed=seed,
                                   solver=dataclasses.replace(self.solver, seed=seed))

    def as_dict(self) -> dict:
        dom = self.domain
        return {
            "domain": {
                "s": dom.s, "p": dom.p, "L": dom.L, "n_modes": dom.n_modes,
                "quadrature": dataclasses.asdict(dom.quad),
            },
            "initial_data": self.initial_data.as_dict(),
            "evolution": dataclasses.asdict(self.evolution),
            "solver": {k: v for k, v in dataclasses.asdict(self.solver).items() if k != "seed"},
            "output": {"directory": self.output.directory, "formats": list(self.output.formats)},
            "seed": self.seed,
        }


def _section(tree: dict, key: str) -> dict:
    value = tree.get(key, {})
    if not isinstance(value, dict):
        raise ConfigError(f"'{key}' must be an object")
    return value


def _check_keys(section: dict, allowed, where: str):
    extra = sorted(set(section) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")


def _number(section: dict, key: str, default, where: str, kind=float):
    if key not in section:
        return default
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {value!r}")
    if kind is int:
        if int(value) != value:
            raise ConfigError(f"{where}.{key} must be an integer, got {value!r}")
        return int(value)
    return float(value)


def _dataclass_from(section: dict, cls, where: str, skip=()):
    fields = {f.name: f for f in dataclasses.fields(cls) if f.name not in skip}
    _check_keys(section, fields, where)
    kwargs = {}
    for name, f in fields.items():
        if name not in section:
            continue
        default = getattr(cls(), name)
        if isinstance(default, str):
            if not isinstance(section[name], str):
                raise ConfigError(f"{where}.{name} must be a string")
            kwargs[name] = section[name]
        else:
            kwargs[name] = _number(section, name, default, where, int if isinstance(default, int) else float)
    return cls(**kwargs)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON experiment configuration, filling defaults."""
    try:
        tree = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(tree, dict):
        raise ConfigError("configuration root must be an object")
    _check_keys(tree, ("domain", "initial_data", "evolution", "solver", "output", "seed"), "config")

    dom = _section(tree, "domain")
    _check_keys(dom, ("s", "p", "L", "n_modes", "quadrature"), "domain")
    quad = _dataclass_from(_section(dom, "quadrature"), QuadratureConfig, "domain.quadrature")
    base = DomainSpec.__dataclass_fields__
    domain = DomainSpec(
        s=_number(dom, "s", base["s"].default, "domain"),
        p=_number(dom, "p", base["p"].default, "domain"),
        L=_number(dom, "L", base["L"].default, "domain"),
        n_modes=_number(dom, "n_modes", base["n_modes"].default, "domain", int),
        quad=quad,
    )

    init = _section(tree, "initial_data")
    _check_keys(init, ("modes", "ground_state_scaled"), "initial_data")
    if not init:
        initial = InitialData(ground_state_scaled=0.5)
    elif "modes" in init and "ground_state_scaled" not in init:
        modes = init["modes"]
        if not isinstance(modes, list) or not modes:
            raise ConfigError("initial_data.modes must be a non-empty list of [index, coefficient]")
        parsed = []
        for entry in modes:
            if (not isinstance(entry, list) or len(entry) != 2
                    or isinstance(entry[0], bool) or not isinstance(entry[0], int)
                    or isinstance(entry[1], bool) or not isinstance(entry[1], (int, float))):
                raise ConfigError(f"bad mode entry {entry!r}; expected [index, coefficient]")
            if not 1 <= entry[0] <= domain.n_modes:
                raise ConfigError(
                    f"mode index {entry[0]} outside 1..{domain.n_modes} (n_modes)")
            parsed.append((int(entry[0]), float(entry[1])))
        initial = InitialData(modes=tuple(parsed))
    else:
        initial = InitialData(
            modes=None if "modes" not in init else (),
            ground_state_scaled=_number(init, "ground_state_scaled", None, "initial_data"),
        )

    evolution = _dataclass_from(_section(tree, "evolution"), EvolutionConfig, "evolution")
    seed = _number(tree, "seed", DEFAULT_SEED, "config", int)
    if seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    solver = _dataclass_from(_section(tree, "solver"), SolverConfig, "solver", skip=("seed",))
    solver = dataclasses.replace(solver, seed=seed)

    out = _section(tree, "output")
    _check_keys(out, ("directory", "formats"), "output")
    directory = out.get("directory", "out")
    if not isinstance(directory, str):
        raise ConfigError("output.directory must be a string")
    formats = out.get("formats", ["csv"])
    if not isinstance(formats, list) or not formats or any(f not in FORMATS for f in formats):
        raise ConfigError(f"output.formats must be a non-empty subset of {list(FORMATS)}")
    return ExperimentConfig(domain, initial, evolution, solver,
                            OutputConfig(directory, tuple(formats)), seed)


def realize_initial_data(cfg: ExperimentConfig, ground_state_field: SpectralField | None = None) -> SpectralField:
    """Coefficients of ``u0``; the ground-state variant needs ``ground_state_field``."""
    init = cfg.initial_data
    N = cfg.domain.n_modes
    if init.modes is not None:
        a = np.zeros(N)
        for i, c in init.modes:
            a[i - 1] += c
        return SpectralField(a)
    if ground_state_field is None:
        raise ValueError("ground_state_scaled initial data needs the ground state")
    return init.ground_state_scaled * ground_state_field


# --------------------------------------------------------------------------
# Emission


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def trajectory_rows(record: TrajectoryRecord):
    for snap, dt in zip(record.snapshots, record.step_sizes):
        yield (snap.t, snap.J, snap.I, 2.0 * snap.S, snap.L, snap.l2_norm, snap.lp_norm,
               snap.seminorm_sq, snap.singular_mass, dt)


def emit_trajectory(record: TrajectoryRecord, path, fmt: str = "csv") -> Path:
    """Write snapshot rows as CSV (with header) or JSON Lines, byte-stable."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown trajectory format {fmt!r}")
    path = Path(path)
    lines = []
    if fmt == "csv":
        lines.append(",".join(TRAJECTORY_COLUMNS))
        for row in trajectory_rows(record):
            lines.append(",".join(_fmt(v) for v in row))
    else:
        for row in trajectory_rows(record):
            body = ", ".join(f'"{k}": {_fmt(v)}' for k, v in zip(TRAJECTORY_COLUMNS, row))
            lines.append("{" + body + "}")
    text = "".join(line + "\n" for line in lines)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def sanitize(value: Any) -> Any:
    """Replace None/NaN by "absent" and infinities by "unbounded", recursively."""
    if isinstance(value, dict):
        return {str(k): sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [sanitize(v) for v in value]
    if isinstance(value, np.ndarray):
        return [sanitize(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "absent"
        if math.isinf(value):
            return "unbounded"
        return value
    if value is None:
        return "absent"
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


def dump_document(doc: dict) -> str:
    return json.dumps(sanitize(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_document(doc: dict, path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dump_document(doc))
    return path
