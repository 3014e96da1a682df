from itertools import product

import numpy as np
import pytest

from iiot_offload.baselines import (
    HOLD,
    SCHEMES,
    ContentionBasedPolicy,
    ContentionFreePolicy,
    LocalPolicy,
    contention_based_device,
    contention_free_bs,
    contention_free_device,
    make_baseline,
    scheme_actions,
    scheme_env_config,
)
from iiot_offload.env import DeviceAction, DeviceObservation, EnvConfig, OffloadEnv
from iiot_offload.exceptions import ConfigError
from iiot_offload.harness import run_episode


def test_local_policy_never_touches_channels():
    env_cfg = scheme_env_config(EnvConfig(), "local")
    policy = LocalPolicy().fit(env_cfg)
    env = OffloadEnv(env_cfg)
    for seed in range(20):
        metrics, records = run_episode(env, policy, seed)
        assert metrics["success_rate"] == 0.0
        assert all(a == [0, 0, 0] for r in records for a in r["actions"])


def test_contention_free_bs_grants_in_id_order():
    assert contention_free_bs([1, 1, 1], [], 2).downlink == (1, 2, 0)
    assert contention_free_bs([0, 1, 1], [], 2).downlink == (0, 1, 2)


def test_contention_free_bs_silent_without_requests():
    assert contention_free_bs([0, 0, 0], [], 2).downlink == (0, 0, 0)


def test_contention_free_bs_ack_overrides_request():
    # device 2 both requested and just completed: it gets the ACK, device 3 the channel
    assert contention_free_bs([1, 1, 1], [2], 2).downlink == (1, 3, 2)


def test_contention_free_device_rules():
    empty, full = DeviceObservation(0, 0), DeviceObservation(3, 0)
    assert contention_free_device(empty, 2, 2) == HOLD
    assert contention_free_device(full, 2, 2) == DeviceAction(1, 2, 1)
    assert contention_free_device(full, 3, 2) == DeviceAction(1, 0, 1)  # ACK: wait
    assert contention_free_device(full, 0, 2) == DeviceAction(1, 0, 1)


def test_contention_based_device_extremes():
    rng = np.random.default_rng(0)
    full = DeviceObservation(2, 0)
    assert all(contention_based_device(full, rng, 0.0, 2) == HOLD for _ in range(200))
    assert contention_based_device(DeviceObservation(0, 0), rng, 1.0, 2) == HOLD


def test_contention_based_device_channel_split():
    rng = np.random.default_rng(1)
    full = DeviceObservation(2, 0)
    picks = np.array([contention_based_device(full, rng, 1.0, 2).channel for _ in range(10_000)])
    assert set(np.unique(picks)) == {1, 2}
    assert abs((picks == 1).mean() - 0.5) < 0.02


def test_contention_based_success_rate_matches_enumeration():
    # always transmitting, 3 devices on 2 channels: enumerate all 8 channel picks
    outcomes = []
    for picks in product((1, 2), repeat=3):
        outcomes.append(sum(picks.count(c) == 1 for c in (1, 2)))
    expected_rs = np.mean(outcomes) / 2  # 0.375
    assert expected_rs == 0.375

    cfg = scheme_env_config(EnvConfig(p_task=1.0, prefill=25, patience_slots=100), "contention-based")
    policy = ContentionBasedPolicy(p_t=1.0, random_state=0).fit(cfg)
    env = OffloadEnv(cfg)
    rs = [run_episode(env, policy, s)[0]["success_rate"] for s in range(400)]
    assert abs(np.mean(rs) - expected_rs) < 0.01


def test_contention_free_never_collides():
    cfg = scheme_env_config(EnvConfig(), "contention-free")
    policy = ContentionFreePolicy().fit(cfg)
    env = OffloadEnv(cfg)
    for seed in range(100):
        metrics, _ = run_episode(env, policy, seed)
        assert metrics["collision_rate"] == 0.0


def test_scheme_action_sets():
    assert len(scheme_actions("combined", 2)) == 6
    remote = scheme_actions("remote-comm", 2)
    assert all(a.offload == 1 for a in remote)
    nocomm = scheme_actions("remote-nocomm", 2)
    assert all(a.offload == 1 and a.uplink == 0 for a in nocomm)
    assert len(nocomm) == 3


def test_scheme_registry():
    assert set(SCHEMES) == {"combined", "remote-comm", "remote-nocomm", "local", "contention-free", "contention-based"}
    with pytest.raises(ConfigError):
        scheme_env_config(EnvConfig(), "greedy")
    with pytest.raises(ConfigError):
        make_baseline("combined")


def test_contention_based_is_reproducible():
    cfg = scheme_env_config(EnvConfig(), "contention-based")
    env = OffloadEnv(cfg)
    a = run_episode(env, make_baseline("contention-based", random_state=3).fit(cfg), 7)[1]
    b = run_episode(env, make_baseline("contention-based", random_state=3).fit(cfg), 7)[1]
    assert a == b


def test_estimator_params():
    est = ContentionBasedPolicy(p_t=0.3, random_state=1)
    assert est.get_params() == {"p_t": 0.3, "random_state": 1}
    with pytest.raises(ConfigError):
        ContentionBasedPolicy(p_t=1.5).fit()
