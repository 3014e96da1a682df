"""Tiny environments with known optimal policies, for trainer sanity checks."""

from __future__ import annotations

import numpy as np


class ChannelBandit:
    """One device, two channels, messages disabled.

    Transmitting on channel 1 pays ``+1`` per slot, anything else pays 0. The
    default one-slot episode makes it a plain contextual bandit; longer
    horizons repeat the same decision. Implements the environment surface used
    by :func:`iiot_offload.mappo.train`.
    """

    n_devices = 1
    n_device_actions = 6  # {no channel, ch 1, ch 2} x {U=0, U=1}
    bs_heads = 1
    bs_symbols = 4
    device_state_dim = 1
    bs_state_dim = 1
    global_state_dim = 2
    rewarding_action = 2  # channel 1, U = 0

    def __init__(self, horizon: int = 1):
        self.horizon = horizon
        self.done = True

    def reset(self, seed=None):
        self.t = 0
        self.done = False

    def device_states(self) -> np.ndarray:
        return np.ones((1, 1))

    def bs_state(self) -> np.ndarray:
        return np.ones(1)

    def global_state(self) -> np.ndarray:
        return np.ones(2)

    def device_masks(self) -> np.ndarray:
        mask = np.zeros((1, 6), dtype=bool)
        mask[0, 0::2] = True
        return mask

    def bs_masks(self) -> np.ndarray:
        mask = np.zeros((1, 4), dtype=bool)
        mask[0, 0] = True
        return mask

    def step_indices(self, device_idx, bs_idx):
        reward = 1.0 if int(device_idx[0]) == self.rewarding_action else 0.0
        self.t += 1
        self.done = self.t >= self.horizon
        return reward, self.done
