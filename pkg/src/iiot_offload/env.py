"""Slot-stepped multi-agent offloading environment.

One base station (BS) with ``M`` shared uplink data channels serves ``N``
devices. Every slot each device picks an environment action (compute the head
task locally, or transmit it on channel ``m``) plus a 1-bit uplink message;
the BS utters one downlink symbol per device (0 null, ``1..M`` grant,
``M + 1`` ACK). Messages have no effect on the dynamics and are delivered one
slot later.

Slot timeline, for slot ``t``:

1. transmissions of non-busy devices are resolved on the channels;
2. winners upload their head task, the BS CPU is split equally among them;
3. devices choosing local computation start on their head task and stay busy
   for ``ceil(delay / slot_ms)`` slots;
4. tasks whose service ends in slot ``t`` are scored ``+rho`` when their total
   delay is within the deadline, ``-rho`` otherwise;
5. queued tasks born ``patience_slots`` or more slots ago are dropped;
6. arrivals for slot ``t + 1`` are drawn, observations and agent states built.

Agent-state layout
------------------
Agent states stack the ``history`` most recent per-slot feature vectors,
newest first, zero-padded before enough slots exist. A device slot vector is::

    [queue_len / K, onehot(S, 3), onehot(prev env action, M + 1),
     prev U, onehot(prev D, M + 2)]

and a BS slot vector is::

    [onehot(h_1, N + 2), ..., onehot(h_M, N + 2), success mask (N),
     prev U vector (N), onehot(prev D_1, M + 2), ..., onehot(prev D_N, M + 2)]

"prev" fields refer to what was sent in the previous slot; they are all-zero in
the first slot of an episode.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .exceptions import ConfigError, ContractViolation, ProtocolError
from .link import LinkConfig, channel_gain, resolve_channels, uplink_rate
from .tasks import (
    Arrival,
    ArrivalConfig,
    ComputeConfig,
    QueueLedger,
    Task,
    TaskQueue,
    TaskRanges,
    local_time,
    maybe_arrive,
    occupancy_slots,
    remote_time,
    sample_task,
)


@dataclass(frozen=True)
class EnvConfig:
    n_devices: int = 3
    link: LinkConfig = LinkConfig()
    compute: ComputeConfig = ComputeConfig()
    tasks: TaskRanges = TaskRanges()
    p_task: float = 0.9
    queue_capacity: int = 25
    t_max: int = 25
    slot_ms: float = 1.0
    rho: float = 1.0
    history: int = 2
    patience_slots: int = 2
    area_m: float = 10.0
    min_distance_m: float = 1.0
    # None: Bernoulli arrival in slot 0; k: exactly k tasks per device, no draw
    prefill: Optional[int] = None
    allow_local: bool = True
    messages: bool = True
    late_drop_penalty: bool = False

    def __post_init__(self):
        if self.n_devices < 1:
            raise ConfigError("need at least one device")
        if self.t_max < 1 or self.history < 1:
            raise ConfigError("t_max and history must be positive")
        if self.slot_ms <= 0 or self.rho <= 0:
            raise ConfigError("slot_ms and rho must be positive")
        if self.patience_slots < 0:
            raise ConfigError("patience_slots must be nonnegative")
        if self.prefill is not None and not 0 <= self.prefill <= self.queue_capacity:
            raise ConfigError("prefill must lie in [0, queue_capacity]")
        ArrivalConfig(self.p_task, self.t_max)
        TaskQueue(self.queue_capacity)

    @property
    def n_channels(self) -> int:
        return self.link.n_channels

    @property
    def ack(self) -> int:
        return self.n_channels + 1

    @property
    def n_device_actions(self) -> int:
        return 2 * (self.n_channels + 1)

    @property
    def n_downlink(self) -> int:
        return self.n_channels + 2

    @property
    def device_slot_dim(self) -> int:
        return 1 + 3 + (self.n_channels + 1) + 1 + self.n_downlink

    @property
    def bs_slot_dim(self) -> int:
        n, m = self.n_devices, self.n_channels
        return m * (n + 2) + 2 * n + n * self.n_downlink


@dataclass(frozen=True)
class DeviceAction:
    offload: int = 0
    channel: int = 0
    uplink: int = 0


@dataclass(frozen=True)
class BsAction:
    downlink: tuple[int, ...]


@dataclass(frozen=True)
class DeviceObservation:
    queue_len: int
    chan_state: int


@dataclass(frozen=True)
class BsObservation:
    chan_states: tuple[int, ...]
    success_set: frozenset[int]


@dataclass(frozen=True)
class Observations:
    """Everything agents see at the start of a slot.

    ``uplink`` holds the messages the BS receives (sent last slot) and
    ``downlink`` the messages the devices receive (sent last slot).
    """

    devices: tuple[DeviceObservation, ...]
    bs: BsObservation
    uplink: tuple[int, ...]
    downlink: tuple[int, ...]
    busy: tuple[bool, ...]


@dataclass(frozen=True)
class StepOutcome:
    observations: Observations
    team_reward: float
    rewards: tuple[float, ...]
    done: bool
    info: dict = field(default_factory=dict)


@dataclass(frozen=True)
class MaskedDiscrete:
    """Factored discrete space: one categorical head per row of ``mask``."""

    sizes: tuple[int, ...]
    mask: np.ndarray


def encode_device_action(action: DeviceAction) -> int:
    return 2 * action.channel + action.uplink


def decode_device_action(index: int, allow_local: bool = True) -> DeviceAction:
    channel, uplink = divmod(int(index), 2)
    # with local computation disabled, "no channel" means holding the task
    offload = 1 if channel > 0 or not allow_local else 0
    return DeviceAction(offload, channel, uplink)


def _onehot(index: Optional[int], size: int) -> np.ndarray:
    out = np.zeros(size)
    if index is not None:
        out[index] = 1.0
    return out


def build_state(window: np.ndarray, slot_features: np.ndarray) -> np.ndarray:
    """Shift ``slot_features`` into the front of a newest-first history window."""
    d = slot_features.shape[-1]
    if window.shape[-1] % d:
        raise ContractViolation(f"window of size {window.shape[-1]} is not a multiple of {d}")
    return np.concatenate([slot_features, window[..., : window.shape[-1] - d]], axis=-1)


@dataclass
class _InService:
    device: int
    task: Task
    done_slot: int
    remote: bool


class OffloadEnv:
    """Discrete-time MEC cell with learned-signalling hooks.

    Parameters
    ----------
    config : EnvConfig
    record_trace : bool
        Keep one dict per slot in ``self.trace`` (see :mod:`iiot_offload.trace`).
    """

    def __init__(self, config: EnvConfig = EnvConfig(), record_trace: bool = False):
        self.config = config
        self.record_trace = record_trace
        self._arrivals = ArrivalConfig(config.p_task, config.t_max)
        self._done = True
        self.trace: list[dict] = []

    # ------------------------------------------------------------------ sizes
    @property
    def n_devices(self) -> int:
        return self.config.n_devices

    @property
    def n_device_actions(self) -> int:
        return self.config.n_device_actions

    @property
    def bs_heads(self) -> int:
        return self.config.n_devices

    @property
    def bs_symbols(self) -> int:
        return self.config.n_downlink

    @property
    def device_state_dim(self) -> int:
        return self.config.history * self.config.device_slot_dim

    @property
    def bs_state_dim(self) -> int:
        return self.config.history * self.config.bs_slot_dim

    @property
    def global_state_dim(self) -> int:
        return self.n_devices * self.device_state_dim + self.bs_state_dim

    # ------------------------------------------------------------------ reset
    def reset(self, seed=None) -> Observations:
        cfg = self.config
        n = cfg.n_devices
        self.rng = np.random.default_rng(seed)
        self.slot = 0
        self._done = False
        self.queues = [TaskQueue(cfg.queue_capacity) for _ in range(n)]
        self.ledger = QueueLedger()
        self.busy_until = np.full(n, -1)
        self.in_service: list[_InService] = []
        self.trace = []

        # BS at the centre of a square area, devices uniform in it
        xy = self.rng.uniform(0.0, cfg.area_m, size=(n, 2))
        dist_m = np.maximum(np.hypot(*(xy - cfg.area_m / 2).T), cfg.min_distance_m)
        self.positions = xy
        self.rates = np.array([uplink_rate(channel_gain(d / 1e3, cfg.link), cfg.link) for d in dist_m])

        if cfg.prefill is None:
            self._arrive()
        else:
            for q in self.queues:
                for _ in range(cfg.prefill):
                    q.push(sample_task(self.rng, cfg.tasks, birth_slot=0))
                    self.ledger.arrived += 1

        self._chan_states = (0,) * cfg.n_channels
        self._dev_chan = (0,) * n
        self._success: frozenset[int] = frozenset()
        self._last_u = (0,) * n
        self._last_d = (0,) * n
        self._last_env_action: Optional[tuple[int, ...]] = None
        self._dev_window = np.zeros((n, self.device_state_dim))
        self._bs_window = np.zeros(self.bs_state_dim)
        self._push_history()
        return self.observe()

    def _arrive(self) -> list[str]:
        outcomes = []
        for q in self.queues:
            out = maybe_arrive(q, self._arrivals, self.rng, self.slot, self.config.tasks)
            if out is not Arrival.SKIPPED:
                self.ledger.arrived += 1
            if out is Arrival.DROPPED_FULL:
                self.ledger.dropped_full += 1
            outcomes.append(out.value)
        return outcomes

    # ----------------------------------------------------------- observation
    def busy(self) -> tuple[bool, ...]:
        return tuple(bool(b >= self.slot) for b in self.busy_until)

    def observe(self) -> Observations:
        devices = tuple(DeviceObservation(len(q), s) for q, s in zip(self.queues, self._dev_chan))
        bs = BsObservation(self._chan_states, self._success)
        return Observations(devices, bs, self._last_u, self._last_d, self.busy())

    def _device_slot_features(self) -> np.ndarray:
        cfg = self.config
        rows = []
        for n, q in enumerate(self.queues):
            prev_e = None if self._last_env_action is None else self._last_env_action[n]
            prev_d = None if self._last_env_action is None else self._last_d[n]
            rows.append(
                np.concatenate(
                    [
                        [len(q) / cfg.queue_capacity],
                        _onehot(self._dev_chan[n], 3),
                        _onehot(prev_e, cfg.n_channels + 1),
                        [self._last_u[n]],
                        _onehot(prev_d, cfg.n_downlink),
                    ]
                )
            )
        return np.array(rows)

    def _bs_slot_features(self) -> np.ndarray:
        cfg = self.config
        first = self._last_env_action is None
        parts = [_onehot(h, cfg.n_devices + 2) for h in self._chan_states]
        parts.append(np.array([float(i + 1 in self._success) for i in range(cfg.n_devices)]))
        parts.append(np.asarray(self._last_u, dtype=float))
        parts.extend(_onehot(None if first else d, cfg.n_downlink) for d in self._last_d)
        return np.concatenate(parts)

    def _push_history(self) -> None:
        self._dev_window = build_state(self._dev_window, self._device_slot_features())
        self._bs_window = build_state(self._bs_window, self._bs_slot_features())

    def device_states(self) -> np.ndarray:
        return self._dev_window.copy()

    def bs_state(self) -> np.ndarray:
        return self._bs_window.copy()

    def global_state(self) -> np.ndarray:
        return np.concatenate([self._dev_window.ravel(), self._bs_window])

    # ----------------------------------------------------------- action space
    def device_masks(self) -> np.ndarray:
        cfg = self.config
        mask = np.ones((cfg.n_devices, cfg.n_device_actions), dtype=bool)
        busy = np.asarray(self.busy())
        mask[busy, 2:] = False
        if not cfg.messages:
            mask[:, 1::2] = False
        return mask

    def bs_masks(self) -> np.ndarray:
        mask = np.ones((self.bs_heads, self.bs_symbols), dtype=bool)
        if not self.config.messages:
            mask[:, 1:] = False
        return mask

    def action_space(self, agent) -> MaskedDiscrete:
        """Masked discrete space of device ``agent`` (0-based) or of the BS (``"bs"``)."""
        if agent == "bs":
            return MaskedDiscrete((self.bs_symbols,) * self.bs_heads, self.bs_masks())
        return MaskedDiscrete((self.n_device_actions,), self.device_masks()[int(agent)][None, :])

    # ------------------------------------------------------------------ step
    def _validate(self, device_actions: Sequence[DeviceAction], bs_action: BsAction) -> None:
        cfg = self.config
        if len(device_actions) != cfg.n_devices:
            raise ProtocolError(f"expected {cfg.n_devices} device actions, got {len(device_actions)}")
        if len(bs_action.downlink) != cfg.n_devices:
            raise ProtocolError("downlink vector length must equal the number of devices")
        busy = self.busy()
        for n, a in enumerate(device_actions):
            if a.offload not in (0, 1) or a.uplink not in (0, 1):
                raise ProtocolError(f"device {n + 1}: offload and uplink must be binary, got {a}")
            if not 0 <= a.channel <= cfg.n_channels:
                raise ProtocolError(f"device {n + 1}: channel {a.channel} outside 0..{cfg.n_channels}")
            if a.offload == 0 and a.channel > 0:
                raise ProtocolError(f"device {n + 1}: channel selected without offloading")
            if busy[n] and a.channel > 0:
                raise ProtocolError(f"device {n + 1} is computing locally and cannot transmit")
            if not cfg.messages and a.uplink:
                raise ProtocolError("uplink messages are disabled in this configuration")
        for d in bs_action.downlink:
            if not 0 <= d <= cfg.ack:
                raise ProtocolError(f"downlink symbol {d} outside 0..{cfg.ack}")
            if not cfg.messages and d:
                raise ProtocolError("downlink messages are disabled in this configuration")

    def step(self, device_actions: Sequence[DeviceAction], bs_action: BsAction) -> StepOutcome:
        if self._done:
            raise ContractViolation("step() called on a finished episode; call reset()")
        self._validate(device_actions, bs_action)
        cfg = self.config
        n_dev, t = cfg.n_devices, self.slot
        busy = self.busy()

        # (1) channel resolution over devices that actually have something to send
        choices = [
            a.channel if a.channel > 0 and not busy[n] and len(self.queues[n]) else 0
            for n, a in enumerate(device_actions)
        ]
        report = resolve_channels(choices, cfg.n_channels)

        # (2) successful uploads share the BS CPU equally
        winners = [w - 1 for w in report.winners]
        f_m = cfg.compute.bs_share(len(winners))
        for n in winners:
            task = self.queues[n].pop()
            delay = remote_time(task, self.rates[n], f_m).total
            task.advance(delay)
            done_slot = t + occupancy_slots(delay, cfg.slot_ms) - 1
            self.in_service.append(_InService(n, task, done_slot, remote=True))

        # (3) local starts
        local_started = []
        if cfg.allow_local:
            for n, a in enumerate(device_actions):
                if a.offload == 0 and a.channel == 0 and not busy[n] and len(self.queues[n]):
                    task = self.queues[n].pop()
                    delay = local_time(task, cfg.compute)
                    task.advance(delay)
                    done_slot = t + occupancy_slots(delay, cfg.slot_ms) - 1
                    self.busy_until[n] = done_slot
                    self.in_service.append(_InService(n, task, done_slot, remote=False))
                    local_started.append(n)

        # (4) completions
        rewards = np.zeros(n_dev)
        success: set[int] = set()
        completed_ok = completed_late = 0
        still = []
        for job in self.in_service:
            if job.done_slot > t:
                still.append(job)
                continue
            if job.task.elapsed <= job.task.deadline:
                rewards[job.device] += cfg.rho
                success.add(job.device + 1)
                completed_ok += 1
            else:
                rewards[job.device] -= cfg.rho
                completed_late += 1
        self.in_service = still
        self.ledger.completed_ok += completed_ok
        self.ledger.completed_late += completed_late

        # (5) timeout drops; survivors age by one slot
        dropped_timeout = 0
        for n, q in enumerate(self.queues):
            gone = q.drop_where(lambda task: t - task.birth_slot >= cfg.patience_slots)
            dropped_timeout += len(gone)
            if cfg.late_drop_penalty:
                rewards[n] -= cfg.rho * len(gone)
            for task in q:
                task.advance(cfg.slot_ms)
        self.ledger.dropped_timeout += dropped_timeout

        # (6) messages become visible next slot
        self._last_u = tuple(int(a.uplink) for a in device_actions)
        self._last_d = tuple(int(d) for d in bs_action.downlink)
        self._last_env_action = tuple(int(a.channel) for a in device_actions)
        self._chan_states = report.channels
        self._dev_chan = report.device_states
        self._success = frozenset(success)

        self.slot += 1
        arrivals = self._arrive() if self.slot < cfg.t_max else ["skipped"] * n_dev
        dropped_full = arrivals.count("dropped_full")

        idle = all(len(q) == 0 for q in self.queues) and not self.in_service
        self._done = self.slot >= cfg.t_max or idle
        self._push_history()

        info = {
            "slot": t,
            "successes": report.n_success,
            "collisions": report.n_collided,
            "completed_ok": completed_ok,
            "completed_late": completed_late,
            "dropped_timeout": dropped_timeout,
            "dropped_full": dropped_full,
            "local_started": len(local_started),
        }
        team = float(rewards.sum())
        if self.record_trace:
            self.trace.append(
                {
                    "slot": t,
                    "actions": [[a.offload, a.channel, a.uplink] for a in device_actions],
                    "uplink": list(self._last_u),
                    "downlink": list(self._last_d),
                    "channels": list(report.channels),
                    "chan_state": list(report.device_states),
                    "rewards": [float(r) for r in rewards],
                    "team_reward": team,
                    "arrivals": arrivals,
                    **{k: v for k, v in info.items() if k != "slot"},
                    "done": self._done,
                }
            )
        return StepOutcome(self.observe(), team, tuple(float(r) for r in rewards), self._done, info)

    def step_indices(self, device_idx: Sequence[int], bs_idx: Sequence[int]) -> tuple[float, bool]:
        """Step with flat action indices, as produced by the learned policies."""
        actions = [decode_device_action(i, self.config.allow_local) for i in device_idx]
        out = self.step(actions, BsAction(tuple(int(d) for d in bs_idx)))
        return out.team_reward, out.done

    @property
    def done(self) -> bool:
        return self._done

    def residual(self) -> int:
        """Tasks still queued or in service."""
        return sum(len(q) for q in self.queues) + len(self.in_service)


def with_mode(config: EnvConfig, *, allow_local: bool, messages: bool) -> EnvConfig:
    return replace(config, allow_local=allow_local, messages=messages)
