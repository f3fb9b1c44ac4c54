"""Flat sectioned key=value run configuration.

Sections: [env], [agent], [training], [output].  Every key has a
default; unknown keys are rejected with a message naming them.
"""

from __future__ import annotations

import configparser
import io
import os
from dataclasses import asdict, fields

from .agents import AgentHyper
from .env import EnvConfig
from .harness import RunConfig


class ConfigError(ValueError):
    pass


TRAINING_DEFAULTS = {
    "steps": 5000,
    "eval_window": 100,
    "buffer_capacity": 100_000,
    "seeds": "1,2,3,5,7",
}

OUTPUT_DEFAULTS = {
    "dir": "runs",
    "force": False,
}


def _section_defaults() -> dict[str, dict]:
    return {
        "env": asdict(EnvConfig()),
        "agent": asdict(AgentHyper()),
        "training": dict(TRAINING_DEFAULTS),
        "output": dict(OUTPUT_DEFAULTS),
    }


def _coerce(key: str, raw: str, default):
    if isinstance(default, bool):
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if isinstance(default, int):
        try:
            return int(raw)
        except ValueError as e:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from e
    if isinstance(default, float):
        try:
            return float(raw)
        except ValueError as e:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from e
    return raw


def parse_config(text: str) -> dict[str, dict]:
    """Parse config text into {section: {key: value}} with defaults
    filled in and unknown sections/keys rejected."""
    defaults = _section_defaults()
    cp = configparser.ConfigParser()
    cp.read_string(text)
    bad = []
    out = {sec: dict(vals) for sec, vals in defaults.items()}
    for sec in cp.sections():
        if sec not in defaults:
            bad.append(f"[{sec}]")
            continue
        for key, raw in cp.items(sec):
            if key not in defaults[sec]:
                bad.append(f"{sec}.{key}")
                continue
            out[sec][key] = _coerce(f"{sec}.{key}", raw, defaults[sec][key])
    if bad:
        raise ConfigError("unknown config keys: " + ", ".join(sorted(bad)))
    return out


def load_config(path: str | None) -> dict[str, dict]:
    if path is None:
        return _section_defaults()
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as f:
        return parse_config(f.read())


def serialize_config(settings: dict[str, dict]) -> str:
    cp = configparser.ConfigParser()
    for sec, vals in settings.items():
        cp[sec] = {k: str(v) for k, v in vals.items()}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def settings_to_run_config(settings: dict[str, dict], seed: int = 0) -> RunConfig:
    env_fields = {f.name for f in fields(EnvConfig)}
    agent_fields = {f.name for f in fields(AgentHyper)}
    env = EnvConfig(**{k: v for k, v in settings["env"].items() if k in env_fields})
    agent = AgentHyper(
        **{k: v for k, v in settings["agent"].items() if k in agent_fields}
    )
    tr = settings["training"]
    return RunConfig(
        env=env,
        agent=agent,
        steps=int(tr["steps"]),
        eval_window=int(tr["eval_window"]),
        buffer_capacity=int(tr["buffer_capacity"]),
        seed=seed,
    ).validate()


def seeds_from_settings(settings: dict[str, dict]) -> list[int]:
    raw = str(settings["training"]["seeds"])
    try:
        return [int(s) for s in raw.split(",") if s.strip() != ""]
    except ValueError as e:
        raise ConfigError(f"training.seeds: bad seed list {raw!r}") from e


def output_dir(settings: dict[str, dict]) -> str:
    # the environment variable overrides the config's output root
    return os.environ.get("ITEMRL_OUT", str(settings["output"]["dir"]))
