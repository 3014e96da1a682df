"""Uplink physical layer and per-slot multichannel collision resolution."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import ConfigError, ProtocolError

IDLE = 0

# device-side selected-channel state
NOT_NEEDED, FREE, COLLIDED = 0, 1, 2


@dataclass(frozen=True)
class LinkConfig:
    bandwidth_hz: float = 10e6
    noise_psd_dbm_hz: float = -174.0
    tx_power_dbm: float = 23.0
    n_channels: int = 2
    pathloss_intercept_db: float = 128.1
    pathloss_slope_db: float = 37.6

    def __post_init__(self):
        if self.bandwidth_hz <= 0:
            raise ConfigError("bandwidth must be positive")
        if self.n_channels < 1:
            raise ConfigError("need at least one data channel")

    @property
    def noise_power_w(self) -> float:
        return dbm_to_watt(self.noise_psd_dbm_hz) * self.bandwidth_hz

    @property
    def tx_power_w(self) -> float:
        return dbm_to_watt(self.tx_power_dbm)


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def pathloss_db(d_km: float, intercept: float = 128.1, slope: float = 37.6) -> float:
    if d_km <= 0:
        raise ValueError(f"distance must be positive, got {d_km} km")
    return intercept + slope * math.log10(d_km)


def channel_gain(d_km: float, cfg: LinkConfig = LinkConfig()) -> float:
    """Linear power gain from distance-only path loss (no fading)."""
    return 10.0 ** (-pathloss_db(d_km, cfg.pathloss_intercept_db, cfg.pathloss_slope_db) / 10.0)


def uplink_rate(gain_linear: float, cfg: LinkConfig = LinkConfig()) -> float:
    """Shannon rate in bit/s on one data channel of bandwidth ``cfg.bandwidth_hz``."""
    if gain_linear < 0:
        raise ValueError("channel gain must be nonnegative")
    snr = gain_linear * cfg.tx_power_w / cfg.noise_power_w
    return cfg.bandwidth_hz * math.log2(1.0 + snr)


@dataclass(frozen=True)
class ChannelReport:
    """Outcome of one slot on the shared uplink.

    ``channels[m]`` is ``0`` when channel ``m + 1`` is idle, the 1-based id of the
    sole transmitter, or ``n_devices + 1`` on collision. ``device_states[n]`` is
    the selected-channel state seen by device ``n + 1``: 0 not needed, 1 free, 2 collision.
    """

    channels: tuple[int, ...]
    device_states: tuple[int, ...]

    @property
    def n_devices(self) -> int:
        return len(self.device_states)

    @property
    def collision_code(self) -> int:
        return self.n_devices + 1

    @property
    def winners(self) -> list[int]:
        """1-based ids of devices that transmitted alone, in channel order."""
        return [h for h in self.channels if IDLE < h < self.collision_code]

    @property
    def n_success(self) -> int:
        return len(self.winners)

    @property
    def n_collided(self) -> int:
        return sum(h == self.collision_code for h in self.channels)


def resolve_channels(choices: Sequence[int], n_channels: int) -> ChannelReport:
    """Resolve one slot of random access.

    ``choices[n]`` is the channel (1..M) device ``n + 1`` transmits on, or 0 for none.
    """
    choices = np.asarray(choices, dtype=int)
    if choices.ndim != 1:
        raise ProtocolError("channel choices must be a flat vector")
    if np.any(choices < 0) or np.any(choices > n_channels):
        raise ProtocolError(f"channel choice outside 0..{n_channels}: {choices.tolist()}")
    n_devices = len(choices)
    counts = np.bincount(choices, minlength=n_channels + 1)
    channels = []
    for m in range(1, n_channels + 1):
        if counts[m] == 0:
            channels.append(IDLE)
        elif counts[m] == 1:
            channels.append(int(np.flatnonzero(choices == m)[0]) + 1)
        else:
            channels.append(n_devices + 1)
    states = tuple(
        NOT_NEEDED if c == 0 else (FREE if counts[c] == 1 else COLLIDED) for c in choices
    )
    return ChannelReport(tuple(channels), states)
