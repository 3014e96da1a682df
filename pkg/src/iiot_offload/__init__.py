"""Multi-agent task offloading with learned signalling in an IIoT edge cell."""

from .baselines import (
    SCHEMES,
    ContentionBasedPolicy,
    ContentionFreePolicy,
    LocalPolicy,
    make_baseline,
    scheme_env_config,
)
from .config import ExperimentConfig, load_config
from .env import BsAction, DeviceAction, EnvConfig, OffloadEnv
from .harness import evaluate, run_experiment
from .mappo import MappoOffloader, PpoHyper, gae_advantages, train

__all__ = [
    "SCHEMES",
    "BsAction",
    "ContentionBasedPolicy",
    "ContentionFreePolicy",
    "DeviceAction",
    "EnvConfig",
    "ExperimentConfig",
    "LocalPolicy",
    "MappoOffloader",
    "OffloadEnv",
    "PpoHyper",
    "evaluate",
    "gae_advantages",
    "load_config",
    "make_baseline",
    "run_experiment",
    "scheme_env_config",
    "train",
]

__version__ = "0.1.0"
