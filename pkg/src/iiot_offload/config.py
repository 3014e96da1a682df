"""Experiment configuration: defaults, YAML loading and strict validation."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from .env import EnvConfig
from .exceptions import ConfigError
from .link import LinkConfig
from .mappo import PpoHyper
from .tasks import ComputeConfig, TaskRanges

# flat key -> (sub-config attribute, field) for the nested EnvConfig pieces
_ENV_NESTED = {
    "n_channels": ("link", "n_channels"),
    "bandwidth_hz": ("link", "bandwidth_hz"),
    "noise_psd_dbm_hz": ("link", "noise_psd_dbm_hz"),
    "tx_power_dbm": ("link", "tx_power_dbm"),
    "pathloss_intercept_db": ("link", "pathloss_intercept_db"),
    "pathloss_slope_db": ("link", "pathloss_slope_db"),
    "f_local_hz": ("compute", "f_local"),
    "f_bs_total_hz": ("compute", "f_bs_total"),
    "bs_allocation": ("compute", "allocation"),
    "task_size_bits": ("tasks", "size_bits"),
    "task_cycles_per_bit": ("tasks", "cycles_per_bit"),
    "task_deadline_ms": ("tasks", "deadline_ms"),
}
_ENV_FLAT = [f.name for f in fields(EnvConfig) if f.name not in ("link", "compute", "tasks")]


def env_config_to_dict(cfg: EnvConfig) -> dict:
    out = {}
    for key, (part, attr) in _ENV_NESTED.items():
        v = getattr(getattr(cfg, part), attr)
        out[key] = list(v) if isinstance(v, tuple) else v
    for key in _ENV_FLAT:
        out[key] = getattr(cfg, key)
    return out


def env_config_from_dict(data: Mapping[str, Any]) -> EnvConfig:
    unknown = set(data) - set(_ENV_NESTED) - set(_ENV_FLAT)
    if unknown:
        raise ConfigError(f"unknown env keys: {sorted(unknown)}")
    parts: dict[str, dict] = {"link": {}, "compute": {}, "tasks": {}}
    flat = {}
    for key, value in data.items():
        if key in _ENV_NESTED:
            part, attr = _ENV_NESTED[key]
            parts[part][attr] = tuple(value) if isinstance(value, list) else value
        else:
            flat[key] = value
    try:
        return EnvConfig(
            link=LinkConfig(**parts["link"]),
            compute=ComputeConfig(**parts["compute"]),
            tasks=TaskRanges(**parts["tasks"]),
            **flat,
        )
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


@dataclass(frozen=True)
class ExperimentConfig:
    env: EnvConfig = EnvConfig()
    ppo: PpoHyper = PpoHyper()
    scheme: str = "combined"
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    eval_interval: int = 100
    eval_episodes: int = 20
    contention_p_t: float = 0.6
    write_traces: bool = True

    def __post_init__(self):
        from .baselines import get_scheme

        get_scheme(self.scheme)
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")
        if self.eval_interval < 1 or self.eval_episodes < 1:
            raise ConfigError("eval_interval and eval_episodes must be positive")
        if not 0.0 <= self.contention_p_t <= 1.0:
            raise ConfigError("contention_p_t must lie in [0, 1]")

    def with_overrides(self, **kw) -> "ExperimentConfig":
        episodes = kw.pop("episodes", None)
        cfg = replace(self, **{k: v for k, v in kw.items() if v is not None})
        if episodes is not None:
            cfg = replace(cfg, ppo=replace(cfg.ppo, episodes=int(episodes)))
        return cfg

    def to_dict(self) -> dict:
        ppo = asdict(self.ppo)
        ppo["hidden"] = list(ppo["hidden"])
        return {
            "scheme": self.scheme,
            "seeds": list(self.seeds),
            "eval_interval": self.eval_interval,
            "eval_episodes": self.eval_episodes,
            "contention_p_t": self.contention_p_t,
            "write_traces": self.write_traces,
            "env": env_config_to_dict(self.env),
            "ppo": ppo,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = {k: v for k, v in data.items() if k not in ("env", "ppo")}
        if "env" in data:
            kw["env"] = env_config_from_dict(data["env"] or {})
        if "ppo" in data:
            ppo = dict(data["ppo"] or {})
            unknown = set(ppo) - {f.name for f in fields(PpoHyper)}
            if unknown:
                raise ConfigError(f"unknown ppo keys: {sorted(unknown)}")
            kw["ppo"] = PpoHyper(**ppo)
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: malformed YAML: {exc}") from None
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return ExperimentConfig.from_dict(data or {})


def dump_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=False))
