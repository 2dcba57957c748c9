"""
Run configuration
=================

A run is described by a TOML file with the sections ``[data]``,
``[synthetic]``, ``[schedule]``, ``[ratios]``, ``[network]``,
``[training]``, ``[benchmarks]``, ``[interpret]`` and ``[output]`` plus a
top-level ``seed``. Command-line overrides use ``SECTION.KEY=VALUE`` with
TOML value syntax (bare words are read as strings).

Example
-------
seed = 7

[synthetic]
months = 396

[ratios]
kinds = ["sharpe", "cvar"]

[training]
hidden_grid = [2, 4]
"""

import logging
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import get_origin

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .benchmarks import BenchmarkConfig
from .config import (
    DEFAULT_ALPHA,
    DEFAULT_BETA,
    DEFAULT_PERMUTATION_REPEATS,
    DEFAULT_SEED,
    DEFAULT_TEST_LEN,
    DEFAULT_TRAIN_LEN,
    OUTPUT_DIR,
    PERTURB_SHIFTS,
)
from .data_io import SyntheticConfig
from .errors import ConfigError
from .network import OutputMode
from .ratios import RatioSpec
from .training import TrainConfig


logger = logging.getLogger(__name__)

INTERPRET_METHODS = ("cw", "pi", "perturb")


@dataclass(frozen=True)
class DataConfig:
    """Input files; ``states`` and ``macro`` are alternatives."""

    returns: Path | None = None
    states: Path | None = None
    macro: Path | None = None

    @property
    def is_set(self) -> bool:
        return any(p is not None for p in (self.returns, self.states, self.macro))


@dataclass(frozen=True)
class ScheduleConfig:
    train_len: int = DEFAULT_TRAIN_LEN
    test_len: int = DEFAULT_TEST_LEN

    def __post_init__(self) -> None:
        for name in ("train_len", "test_len"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(f"schedule.{name} must be a positive integer")


@dataclass(frozen=True)
class RatioConfig:
    kinds: tuple[str, ...] = ("sharpe",)
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA

    def __post_init__(self) -> None:
        if not self.kinds:
            raise ConfigError("ratios.kinds must name at least one ratio")
        if len(set(self.kinds)) != len(self.kinds):
            raise ConfigError("ratios.kinds lists a ratio twice")
        # Parsing validates every token and the tail parameters
        self.specs

    @property
    def specs(self) -> tuple[RatioSpec, ...]:
        return tuple(RatioSpec.parse(kind, self.alpha, self.beta) for kind in self.kinds)


@dataclass(frozen=True)
class NetworkConfig:
    output_mode: OutputMode = OutputMode.LAGRANGIAN

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "output_mode", OutputMode(self.output_mode))
        except ValueError as exc:
            raise ConfigError(
                f"network.output_mode must be 'lagrangian' or 'complement', got '{self.output_mode}'."
            ) from exc


@dataclass(frozen=True)
class InterpretConfig:
    methods: tuple[str, ...] = INTERPRET_METHODS
    repeats: int = DEFAULT_PERMUTATION_REPEATS
    shifts: tuple[int, ...] = PERTURB_SHIFTS

    def __post_init__(self) -> None:
        object.__setattr__(self, "shifts", tuple(int(s) for s in self.shifts))
        bad = [m for m in self.methods if m not in INTERPRET_METHODS]
        if bad:
            raise ConfigError(f"Unknown interpret method(s) {', '.join(bad)}; expected cw, pi or perturb.")
        if self.repeats < 1:
            raise ConfigError("interpret.repeats must be at least 1")
        if 0 not in self.shifts:
            raise ConfigError("interpret.shifts must include 0")


@dataclass(frozen=True)
class OutputConfig:
    dir: Path = OUTPUT_DIR
    replace: bool = True


@dataclass(frozen=True)
class RunConfig:
    seed: int = DEFAULT_SEED
    data: DataConfig = field(default_factory=DataConfig)
    synthetic: SyntheticConfig | None = None
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    ratios: RatioConfig = field(default_factory=RatioConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    training: TrainConfig = field(default_factory=TrainConfig)
    benchmarks: BenchmarkConfig = field(default_factory=BenchmarkConfig)
    interpret: InterpretConfig = field(default_factory=InterpretConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict:
        """Echo of the effective configuration (paths as strings)."""
        return {
            "seed": self.seed,
            "data": {k: None if v is None else str(v) for k, v in vars(self.data).items()},
            "synthetic": None if self.synthetic is None else dict(vars(self.synthetic)),
            "schedule": dict(vars(self.schedule)),
            "ratios": {"kinds": list(self.ratios.kinds), "alpha": self.ratios.alpha, "beta": self.ratios.beta},
            "network": {"output_mode": self.network.output_mode.value},
            "training": self.training.to_dict(),
            "benchmarks": self.benchmarks.to_dict(),
            "interpret": {
                "methods": list(self.interpret.methods),
                "repeats": self.interpret.repeats,
                "shifts": list(self.interpret.shifts),
            },
            "output": {"dir": str(self.output.dir), "replace": self.output.replace},
        }


# ============================================================================
# Parsing
# ============================================================================

SECTIONS = {
    "data": DataConfig,
    "synthetic": SyntheticConfig,
    "schedule": ScheduleConfig,
    "ratios": RatioConfig,
    "network": NetworkConfig,
    "training": TrainConfig,
    "benchmarks": BenchmarkConfig,
    "interpret": InterpretConfig,
    "output": OutputConfig,
}


def parse_override(text: str) -> tuple[str, str | None, object]:
    """Split ``SECTION.KEY=VALUE`` (or ``seed=VALUE``) into its parts."""
    key, sep, raw = text.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"Override '{text}' must look like SECTION.KEY=VALUE.")
    try:
        value = tomllib.loads(f"value = {raw.strip()}")["value"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    section, dot, name = key.strip().partition(".")
    if not dot:
        return section, None, value
    return section, name, value


def _split_list(value: object) -> object:
    # "sharpe,cvar" from the command line means a list
    if isinstance(value, str) and "," in value:
        return [part.strip() for part in value.split(",") if part.strip()]
    return value


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Return a copy of ``raw`` with command-line overrides applied."""
    merged = {k: dict(v) if isinstance(v, dict) else v for k, v in raw.items()}
    for text in overrides:
        section, name, value = parse_override(text)
        if name is None:
            merged[section] = value
        else:
            merged.setdefault(section, {})
            if not isinstance(merged[section], dict):
                raise ConfigError(f"'{section}' is not a configuration section.")
            merged[section][name] = _split_list(value)
    return merged


def _section(cls: type, values: dict, name: str) -> object:
    if not isinstance(values, dict):
        raise ConfigError(f"[{name}] must be a table of settings.")
    init_fields = {f.name: f for f in fields(cls) if f.init}
    unknown = sorted(set(values) - set(init_fields))
    if unknown:
        raise ConfigError(f"Unknown key(s) in [{name}]: {', '.join(unknown)}.")
    kwargs = {}
    for key, value in values.items():
        if isinstance(value, list):
            value = tuple(value)
        elif get_origin(init_fields[key].type) is tuple:
            value = (value,)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"Invalid value in [{name}]: {exc}") from exc


def _resolve(path: object, base: Path) -> Path:
    resolved = Path(str(path)).expanduser()
    if not resolved.is_absolute():
        resolved = base / resolved
    if not resolved.exists():
        raise FileNotFoundError(f"Input file not found: {resolved}")
    return resolved


def build_run_config(raw: dict, base_dir: Path | None = None) -> RunConfig:
    """Validate a raw mapping and build the ``RunConfig``.

    Raises
    ------
    ConfigError
        On unknown sections or keys, invalid values, or when neither (or
        both) of ``[data]`` and ``[synthetic]`` are given.
    FileNotFoundError
        If a data path does not exist.
    """
    base_dir = base_dir or Path.cwd()
    unknown = sorted(set(raw) - set(SECTIONS) - {"seed"})
    if unknown:
        raise ConfigError(f"Unknown configuration section(s): {', '.join(unknown)}.")

    seed = raw.get("seed", DEFAULT_SEED)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed must be a non-negative integer")

    data_raw = dict(raw.get("data", {}))
    if "returns" in data_raw and ("states" in data_raw) == ("macro" in data_raw):
        raise ConfigError("[data] needs returns plus exactly one of states or macro.")
    data = DataConfig(**{k: _resolve(v, base_dir) for k, v in _known(data_raw, DataConfig, "data").items()})
    if data.is_set and data.returns is None:
        raise ConfigError("[data] needs a returns file.")
    if data.is_set == ("synthetic" in raw):
        raise ConfigError("Give exactly one data source: a [data] section or a [synthetic] section.")

    training_raw = {**raw.get("training", {}), "seed": seed}
    output_raw = dict(raw.get("output", {}))
    if "dir" in output_raw:
        output_raw["dir"] = Path(str(output_raw["dir"]))

    config = RunConfig(
        seed=seed,
        data=data,
        synthetic=_section(SyntheticConfig, raw["synthetic"], "synthetic") if "synthetic" in raw else None,
        schedule=_section(ScheduleConfig, raw.get("schedule", {}), "schedule"),
        ratios=_section(RatioConfig, raw.get("ratios", {}), "ratios"),
        network=_section(NetworkConfig, raw.get("network", {}), "network"),
        training=_section(TrainConfig, training_raw, "training"),
        benchmarks=_section(BenchmarkConfig, raw.get("benchmarks", {}), "benchmarks"),
        interpret=_section(InterpretConfig, raw.get("interpret", {}), "interpret"),
        output=_section(OutputConfig, output_raw, "output"),
    )
    return config


def _known(values: dict, cls: type, name: str) -> dict:
    allowed = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - allowed)
    if unknown:
        raise ConfigError(f"Unknown key(s) in [{name}]: {', '.join(unknown)}.")
    return values


def load_run_config(
    path: Path | str | None = None,
    overrides: list[str] | None = None,
    updates: dict[str, object] | None = None,
) -> RunConfig:
    """Read a TOML run file (optional), apply overrides and validate.

    ``overrides`` are ``SECTION.KEY=VALUE`` strings; ``updates`` maps
    ``"SECTION.KEY"`` (or ``"seed"``) to already-typed values and is applied
    last. Relative data paths are resolved against the file's directory
    (the working directory when no file is given).
    """
    raw: dict = {}
    base_dir = Path.cwd()
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"Configuration file not found: {path}")
        try:
            raw = tomllib.loads(path.read_text())
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"Cannot parse {path}: {exc}") from exc
        base_dir = path.parent
    merged = apply_overrides(raw, overrides or [])
    for key, value in (updates or {}).items():
        section, _, name = key.partition(".")
        if name:
            merged.setdefault(section, {})[name] = value
        else:
            merged[section] = value
    config = build_run_config(merged, base_dir)
    logger.debug("Loaded run configuration: %s", config.to_dict())
    return config


__all__ = [
    "INTERPRET_METHODS",
    "DataConfig",
    "ScheduleConfig",
    "RatioConfig",
    "NetworkConfig",
    "InterpretConfig",
    "OutputConfig",
    "RunConfig",
    "SECTIONS",
    "parse_override",
    "apply_overrides",
    "build_run_config",
    "load_run_config",
]
