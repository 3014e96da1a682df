"""Per-episode performance metrics and across-seed aggregation."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .exceptions import ContractViolation

Z95 = 1.959963984540054


def channel_success_rate(n_success: int, n_channels: int, n_slots: int) -> float:
    """Fraction of channel-slots carrying exactly one transmission."""
    if n_channels <= 0 or n_slots <= 0:
        raise ContractViolation("channel and slot counts must be positive")
    if not 0 <= n_success <= n_channels * n_slots:
        raise ContractViolation(f"{n_success} successes impossible on {n_channels}x{n_slots} channel-slots")
    return n_success / (n_channels * n_slots)


def collision_rate(n_collided: int, n_channels: int, n_slots: int) -> float:
    """Fraction of channel-slots lost to collisions."""
    if n_channels <= 0 or n_slots <= 0:
        raise ContractViolation("channel and slot counts must be positive")
    if not 0 <= n_collided <= n_channels * n_slots:
        raise ContractViolation(f"{n_collided} collisions impossible on {n_channels}x{n_slots} channel-slots")
    return n_collided / (n_channels * n_slots)


def goodput(n_received: int, n_slots: int) -> float:
    """Distinct tasks received at the base station per slot."""
    if n_slots <= 0:
        raise ContractViolation("episode must last at least one slot")
    if n_received < 0:
        raise ContractViolation("received-task count cannot be negative")
    return n_received / n_slots


def episode_metrics(records: Sequence[dict], n_channels: int) -> dict:
    """Metrics of one episode from its per-slot info/trace records."""
    T = len(records)
    successes = sum(r["successes"] for r in records)
    collided = sum(r["collisions"] for r in records)
    return {
        "tasks_ok": float(sum(r["completed_ok"] for r in records)),
        "success_rate": channel_success_rate(successes, n_channels, T),
        "collision_rate": collision_rate(collided, n_channels, T),
        "goodput": goodput(successes, T),
        "team_reward": float(sum(r["team_reward"] for r in records)),
    }


METRICS = ("tasks_ok", "success_rate", "collision_rate", "goodput", "team_reward")


def mean_ci(samples, axis: int = 0, z: float = Z95):
    """Mean and normal-approximation confidence bounds along ``axis``.

    A single sample gives a zero-width interval.
    """
    x = np.asarray(samples, dtype=float)
    n = x.shape[axis]
    mean = x.mean(axis=axis)
    if n < 2:
        return mean, mean.copy(), mean.copy()
    half = z * x.std(axis=axis, ddof=1) / math.sqrt(n)
    return mean, mean - half, mean + half
