"""Line-oriented benchmark config files.

Grammar::

    # comment
    [environment]
    name=wheel
    delta=0.95
    [agent "LinFullPost"]
    a0=6
    [agent "Uniform"]
    [run]
    trials=10
    horizon=2000
    seed=0
    out=results
    workers=1

One ``[environment]`` block, any number of ``[agent "<preset>"]`` blocks
(each preset at most once), and at most one ``[run]`` block.  Keys are
validated against the environment schema or the preset's declared override
schema; violations raise ``ConfigError`` carrying the offending line number.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .presets import PRESETS

_AGENT_HEADER = re.compile(r'^\[agent\s+"([^"]+)"\]$')

ENV_NAMES = ("wheel", "linear", "dataset")

# key -> (type, required)
_ENV_SCHEMAS: dict[str, dict[str, tuple]] = {
    "wheel": {
        "delta": (float, True),
        "horizon": (int, False),
        "safe_reward": (float, False),
        "inner_reward": (float, False),
        "outer_reward": (float, False),
        "noise_sigma": (float, False),
        "constant_feature": (bool, False),
    },
    "linear": {
        "dim": (int, False),
        "num_actions": (int, False),
        "horizon": (int, False),
        "beta_variance": (float, False),
        "noise_sigma": (float, False),
        "context_mean": (float, False),
        "constant_feature": (bool, False),
    },
    "dataset": {
        "path": (str, True),
        "reward_rule": (str, True),
        "delimiter": (str, False),
        "header": (bool, False),
        "label_column": ("column", False),
        "numeric_columns": ("columns", False),
        "categorical_columns": ("columns", False),
        "reward_columns": ("columns", False),
        "num_actions": (int, False),
        "horizon": (int, False),
        "seed": (int, False),
        "constant_feature": (bool, False),
    },
}

_RUN_SCHEMA: dict[str, type] = {
    "trials": int,
    "horizon": int,
    "seed": int,
    "out": str,
    "workers": int,
}


class ConfigError(ValueError):
    """Config problem; carries the 1-based line number when one applies."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass
class AgentSpec:
    preset: str
    overrides: dict
    line: int


@dataclass
class RunSettings:
    trials: int = 10
    horizon: Optional[int] = None
    seed: int = 0
    out: str = "results"
    workers: int = 1


@dataclass
class BenchmarkConfig:
    environment: dict
    agents: list[AgentSpec]
    run: RunSettings = field(default_factory=RunSettings)


def _column(raw: str):
    try:
        return int(raw)
    except ValueError:
        return raw


def _convert(raw: str, typ, key: str, line: int):
    try:
        if typ is bool:
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        if typ is str:
            return raw
        if typ == "column":
            return _column(raw)
        if typ == "columns":
            return tuple(_column(c.strip()) for c in raw.split(",") if c.strip() != "")
    except ValueError:
        pass
    else:
        raise ConfigError(f"internal: unhandled type for key {key!r}", line)
    want = typ if isinstance(typ, str) else typ.__name__
    raise ConfigError(f"value {raw!r} for key {key!r} is not a valid {want}", line)


def _split_kv(text: str, line: int) -> tuple[str, str]:
    if "=" not in text:
        raise ConfigError(f"expected key=value, got {text!r}", line)
    key, _, value = text.partition("=")
    key = key.strip()
    if not key:
        raise ConfigError("empty key", line)
    return key, value.strip()


def parse_config(text: str) -> BenchmarkConfig:
    """Parse and validate a config document; raises ConfigError on problems."""
    env_raw: Optional[dict] = None
    env_line = 0
    agents: list[AgentSpec] = []
    run_raw: Optional[dict] = None
    section: Optional[str] = None  # "environment" | "agent" | "run"
    current: Optional[dict] = None

    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if line == "[environment]":
                if env_raw is not None:
                    raise ConfigError("duplicate [environment] section", line_no)
                env_raw, env_line, section = {}, line_no, "environment"
                current = env_raw
                continue
            if line == "[run]":
                if run_raw is not None:
                    raise ConfigError("duplicate [run] section", line_no)
                run_raw, section = {}, "run"
                current = run_raw
                continue
            m = _AGENT_HEADER.match(line)
            if m:
                preset = m.group(1)
                if preset not in PRESETS:
                    raise ConfigError(f"unknown agent preset {preset!r}", line_no)
                if any(a.preset == preset for a in agents):
                    raise ConfigError(f"duplicate agent block for {preset!r}", line_no)
                spec = AgentSpec(preset=preset, overrides={}, line=line_no)
                agents.append(spec)
                section, current = "agent", spec.overrides
                continue
            raise ConfigError(f"unrecognized section header {line!r}", line_no)

        if current is None:
            raise ConfigError("key=value before any section header", line_no)
        key, value = _split_kv(line, line_no)
        if key in current:
            raise ConfigError(f"duplicate key {key!r}", line_no)

        if section == "environment":
            if key == "name":
                if value not in ENV_NAMES:
                    raise ConfigError(
                        f"unknown environment {value!r}; expected one of {ENV_NAMES}",
                        line_no,
                    )
                current[key] = value
            else:
                current[key] = (value, line_no)  # typed once the name is known
        elif section == "agent":
            schema = PRESETS[agents[-1].preset].params
            if key not in schema:
                raise ConfigError(
                    f"preset {agents[-1].preset!r} does not accept key {key!r}",
                    line_no,
                )
            current[key] = _convert(value, schema[key], key, line_no)
        else:  # run
            if key not in _RUN_SCHEMA:
                raise ConfigError(f"unknown [run] key {key!r}", line_no)
            current[key] = _convert(value, _RUN_SCHEMA[key], key, line_no)

    if env_raw is None:
        raise ConfigError("missing [environment] section")
    if "name" not in env_raw:
        raise ConfigError("environment block must set name=", env_line)

    name = env_raw["name"]
    schema = _ENV_SCHEMAS[name]
    environment = {"name": name}
    for key, entry in env_raw.items():
        if key == "name":
            continue
        value, line_no = entry
        if key not in schema:
            raise ConfigError(
                f"environment {name!r} does not accept key {key!r}", line_no
            )
        environment[key] = _convert(value, schema[key][0], key, line_no)
    for key, (_, required) in schema.items():
        if required and key not in environment:
            raise ConfigError(
                f"environment {name!r} requires key {key!r}", env_line
            )

    run = RunSettings()
    if run_raw:
        for key, value in run_raw.items():
            setattr(run, key, value)
    if run.trials < 1:
        raise ConfigError("trials must be positive")
    if run.horizon is not None and run.horizon < 1:
        raise ConfigError("horizon must be positive")
    if run.workers < 1:
        raise ConfigError("workers must be positive")

    return BenchmarkConfig(environment=environment, agents=agents, run=run)


def load_config(path: str) -> BenchmarkConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
