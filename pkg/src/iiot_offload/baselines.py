"""Comparison schemes and the scheme registry.

Hand-coded schemes (local, contention-free, contention-based) are estimators
with a no-op ``fit`` and a ``predict`` that maps the current
:class:`~iiot_offload.env.Observations` to one joint action. The remote
schemes are the learned policy trained under a restricted action space; the
restriction lives in the environment configuration returned by
:func:`scheme_env_config`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .env import (
    BsAction,
    DeviceAction,
    DeviceObservation,
    EnvConfig,
    Observations,
    decode_device_action,
)
from .exceptions import ConfigError

# offload decided but no channel used this slot: task stays queued
HOLD = DeviceAction(offload=1, channel=0, uplink=0)


@dataclass(frozen=True)
class Scheme:
    name: str
    allow_local: bool
    messages: bool
    learned: bool


SCHEMES = {
    s.name: s
    for s in (
        Scheme("combined", allow_local=True, messages=True, learned=True),
        Scheme("remote-comm", allow_local=False, messages=True, learned=True),
        Scheme("remote-nocomm", allow_local=False, messages=False, learned=True),
        Scheme("local", allow_local=True, messages=False, learned=False),
        Scheme("contention-free", allow_local=False, messages=True, learned=False),
        Scheme("contention-based", allow_local=False, messages=False, learned=False),
    )
}


def get_scheme(name: str) -> Scheme:
    try:
        return SCHEMES[name]
    except KeyError:
        raise ConfigError(f"unknown scheme {name!r}; choose from {sorted(SCHEMES)}") from None


def scheme_env_config(base: EnvConfig, scheme: str) -> EnvConfig:
    s = get_scheme(scheme)
    return replace(base, allow_local=s.allow_local, messages=s.messages)


def scheme_actions(scheme: str, n_channels: int) -> list[DeviceAction]:
    """Device actions reachable through the learned index space of ``scheme``."""
    s = get_scheme(scheme)
    out = []
    for idx in range(2 * (n_channels + 1)):
        a = decode_device_action(idx, s.allow_local)
        if not s.messages and a.uplink:
            continue
        out.append(a)
    return out


# --------------------------------------------------------------- local-only
def local_policy(obs: DeviceObservation) -> DeviceAction:
    return DeviceAction(0, 0, 0)


# ---------------------------------------------------------- contention-free
def contention_free_bs(
    requests: Sequence[int], completions: Iterable[int], n_channels: int
) -> BsAction:
    """Grant channels to requesting devices in ascending id order.

    ``completions`` holds 1-based ids of devices that just completed a task;
    they get an ACK and their request is ignored.
    """
    done = set(completions)
    ack = n_channels + 1
    downlink = [0] * len(requests)
    free = iter(range(1, n_channels + 1))
    for n, req in enumerate(requests):
        if n + 1 in done:
            downlink[n] = ack
        elif req:
            downlink[n] = next(free, 0)
    return BsAction(tuple(downlink))


def contention_free_device(obs: DeviceObservation, last_downlink: int, n_channels: int) -> DeviceAction:
    request = int(obs.queue_len > 0)
    if obs.queue_len > 0 and 1 <= last_downlink <= n_channels:
        return DeviceAction(1, int(last_downlink), request)
    return replace(HOLD, uplink=request)


# --------------------------------------------------------- contention-based
def contention_based_device(
    obs: DeviceObservation, rng: np.random.Generator, p_t: float, n_channels: int
) -> DeviceAction:
    if obs.queue_len == 0:
        return HOLD
    if rng.random() < p_t:
        return DeviceAction(1, int(rng.integers(1, n_channels + 1)), 0)
    return HOLD


# --------------------------------------------------------------- estimators
class _FixedPolicy(BaseEstimator):
    scheme = ""

    def fit(self, env_config: EnvConfig = EnvConfig(), y=None):
        self.n_channels_ = env_config.n_channels
        self.n_devices_ = env_config.n_devices
        return self

    def act(self, env, greedy: bool = True):
        """Joint action for the current slot of ``env``."""
        return self.predict(env.observe())


class LocalPolicy(_FixedPolicy):
    scheme = "local"

    def predict(self, obs: Observations):
        check_is_fitted(self)
        return [local_policy(o) for o in obs.devices], BsAction((0,) * self.n_devices_)


class ContentionFreePolicy(_FixedPolicy):
    scheme = "contention-free"

    def predict(self, obs: Observations):
        check_is_fitted(self)
        m = self.n_channels_
        devices = [contention_free_device(o, d, m) for o, d in zip(obs.devices, obs.downlink)]
        bs = contention_free_bs(obs.uplink, obs.bs.success_set, m)
        return devices, bs


class ContentionBasedPolicy(_FixedPolicy):
    """p-persistent random access on a uniformly chosen channel."""

    scheme = "contention-based"

    def __init__(self, p_t: float = 0.6, random_state=None):
        self.p_t = p_t
        self.random_state = random_state

    def fit(self, env_config: EnvConfig = EnvConfig(), y=None):
        if not 0.0 <= self.p_t <= 1.0:
            raise ConfigError(f"p_t must lie in [0, 1], got {self.p_t}")
        super().fit(env_config)
        self.rng_ = np.random.default_rng(self.random_state)
        return self

    def predict(self, obs: Observations):
        check_is_fitted(self)
        devices = [contention_based_device(o, self.rng_, self.p_t, self.n_channels_) for o in obs.devices]
        return devices, BsAction((0,) * self.n_devices_)


def make_baseline(scheme: str, p_t: float = 0.6, random_state=None) -> _FixedPolicy:
    if scheme == "local":
        return LocalPolicy()
    if scheme == "contention-free":
        return ContentionFreePolicy()
    if scheme == "contention-based":
        return ContentionBasedPolicy(p_t=p_t, random_state=random_state)
    raise ConfigError(f"{scheme!r} is not a hand-coded scheme")
