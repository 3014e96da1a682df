"""Computation tasks, device queues, arrivals and execution timing.

All durations are in milliseconds, frequencies in Hz and sizes in bits.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional

import numpy as np

from .exceptions import ConfigError, OffloadFailure


@dataclass
class Task:
    """A non-divisible unit of compute demand.

    Attributes
    ----------
    size_bits : int
        Payload size in bits.
    cycles_per_bit : int
        CPU cycles needed per payload bit.
    deadline : float
        Delay tolerance in milliseconds, measured from ``birth_slot``.
    birth_slot : int
        Slot in which the task entered its queue.
    elapsed : float
        Delay accumulated since birth, in milliseconds.
    """

    size_bits: int
    cycles_per_bit: int
    deadline: float
    birth_slot: int = 0
    elapsed: float = 0.0

    @property
    def cycles(self) -> int:
        return self.size_bits * self.cycles_per_bit

    def advance(self, ms: float) -> None:
        if ms < 0:
            raise ValueError("elapsed time cannot decrease")
        self.elapsed += ms


@dataclass(frozen=True)
class TaskRanges:
    """Inclusive ranges the default task generator draws from."""

    size_bits: tuple[int, int] = (100, 500)
    cycles_per_bit: tuple[int, int] = (100, 20_000)
    deadline_ms: tuple[float, float] = (1.0, 5.0)

    def __post_init__(self):
        for name in ("size_bits", "cycles_per_bit", "deadline_ms"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigError(f"{name}: min {lo} exceeds max {hi}")
            if lo < 0:
                raise ConfigError(f"{name}: negative bound {lo}")


def sample_task(rng: np.random.Generator, ranges: TaskRanges = TaskRanges(), birth_slot: int = 0) -> Task:
    a_lo, a_hi = ranges.size_bits
    l_lo, l_hi = ranges.cycles_per_bit
    d_lo, d_hi = ranges.deadline_ms
    if a_lo > a_hi or l_lo > l_hi or d_lo > d_hi:
        raise ConfigError("task range with min > max")
    size = int(rng.integers(a_lo, a_hi, endpoint=True))
    cpb = int(rng.integers(l_lo, l_hi, endpoint=True))
    deadline = float(rng.uniform(d_lo, d_hi)) if d_hi > d_lo else float(d_lo)
    return Task(size, cpb, deadline, birth_slot=birth_slot)


class TaskQueue:
    """Bounded FIFO of tasks; pushes onto a full queue are discarded and counted."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ConfigError("queue capacity must be positive")
        self.capacity = capacity
        self._items: deque[Task] = deque()
        self.dropped_full = 0

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator[Task]:
        return iter(self._items)

    @property
    def full(self) -> bool:
        return len(self._items) >= self.capacity

    def push(self, task: Task) -> bool:
        if self.full:
            self.dropped_full += 1
            return False
        self._items.append(task)
        return True

    def head(self) -> Optional[Task]:
        return self._items[0] if self._items else None

    def pop(self) -> Task:
        return self._items.popleft()

    def drop_where(self, predicate) -> list[Task]:
        """Remove and return every task for which ``predicate(task)`` holds, keeping order."""
        kept, dropped = deque(), []
        for task in self._items:
            (dropped if predicate(task) else kept).append(task)
        self._items = kept
        return dropped


@dataclass(frozen=True)
class ArrivalConfig:
    p_task: float = 0.9
    horizon: int = 25

    def __post_init__(self):
        if not 0.0 <= self.p_task <= 1.0:
            raise ConfigError(f"p_task must lie in [0, 1], got {self.p_task}")
        if self.horizon < 1:
            raise ConfigError("horizon must be positive")

    @property
    def rate(self) -> float:
        """Expected arrivals per device per episode."""
        return self.p_task * self.horizon


class Arrival(enum.Enum):
    ARRIVED = "arrived"
    SKIPPED = "skipped"
    DROPPED_FULL = "dropped_full"


def maybe_arrive(
    queue: TaskQueue,
    cfg: ArrivalConfig,
    rng: np.random.Generator,
    slot: int,
    ranges: TaskRanges = TaskRanges(),
) -> Arrival:
    """Per-slot Bernoulli(p_task) arrival into ``queue``."""
    if slot >= cfg.horizon:
        raise ValueError(f"slot {slot} beyond horizon {cfg.horizon}")
    # draw the coin even when p is 0 or 1 so the rng stream does not depend on p
    if rng.random() >= cfg.p_task:
        return Arrival.SKIPPED
    task = sample_task(rng, ranges, birth_slot=slot)
    return Arrival.ARRIVED if queue.push(task) else Arrival.DROPPED_FULL


@dataclass(frozen=True)
class ComputeConfig:
    f_local: float = 1e9
    f_bs_total: float = 100e9
    allocation: str = "equal-split"

    def __post_init__(self):
        if self.f_local <= 0 or self.f_bs_total <= 0:
            raise ConfigError("CPU frequencies must be positive")
        if self.f_local > self.f_bs_total:
            raise ConfigError("device CPU cannot exceed the base-station CPU")
        if self.allocation != "equal-split":
            raise ConfigError(f"unknown allocation rule {self.allocation!r}")

    def bs_share(self, n_scheduled: int) -> float:
        """CPU frequency granted to each of ``n_scheduled`` simultaneous offloads."""
        return self.f_bs_total / max(n_scheduled, 1)


class RemoteTime(NamedTuple):
    upload: float
    execute: float
    total: float


def local_time(task: Task, cfg: ComputeConfig) -> float:
    return task.size_bits * task.cycles_per_bit / cfg.f_local * 1e3


def remote_time(task: Task, rate_bps: float, f_m: float) -> RemoteTime:
    if rate_bps <= 0:
        raise ValueError("non-positive uplink rate: no usable channel")
    if f_m <= 0:
        raise ValueError("non-positive base-station CPU share")
    upload = task.size_bits / rate_bps * 1e3
    execute = task.size_bits * task.cycles_per_bit / f_m * 1e3
    return RemoteTime(upload, execute, upload + execute)


def task_delay(
    task: Task,
    offload: int,
    cfg: ComputeConfig,
    rate_bps: Optional[float] = None,
    f_m: Optional[float] = None,
) -> float:
    """Service delay of ``task`` under offloading decision ``offload``.

    Raises
    ------
    OffloadFailure
        ``offload == 1`` but no channel was granted (``rate_bps`` missing or zero).
        The caller keeps the task queued and lets one slot elapse.
    """
    if offload == 0:
        return local_time(task, cfg)
    if offload != 1:
        raise ValueError(f"offload decision must be 0 or 1, got {offload}")
    if rate_bps is None or rate_bps <= 0 or f_m is None:
        raise OffloadFailure("remote execution without a granted channel")
    return remote_time(task, rate_bps, f_m).total


def occupancy_slots(delay_ms: float, slot_ms: float) -> int:
    """Number of slots an executor is held by a job of ``delay_ms`` (at least one)."""
    return max(1, math.ceil(delay_ms / slot_ms - 1e-12))


@dataclass
class QueueLedger:
    """Running totals used for the conservation check."""

    arrived: int = 0
    completed_ok: int = 0
    completed_late: int = 0
    dropped_timeout: int = 0
    dropped_full: int = 0

    @property
    def completed(self) -> int:
        return self.completed_ok + self.completed_late

    @property
    def dropped(self) -> int:
        return self.dropped_timeout + self.dropped_full
