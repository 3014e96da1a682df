"""Acceptance suite: one test per criterion, each recorded as a PASS/FAIL line.

The scheme-comparison run (ordering and channel-access checks) trains every
learned scheme for 6000 episodes on 5 seeds and takes about twenty minutes on
one core. Set ``IIOT_OFFLOAD_ACCEPTANCE_OUT`` to keep its output directory.
"""

import filecmp
import math
import os
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from iiot_offload.baselines import SCHEMES, make_baseline, scheme_env_config
from iiot_offload.config import load_config
from iiot_offload.env import EnvConfig, OffloadEnv
from iiot_offload.harness import run_episode, run_experiment
from iiot_offload.link import LinkConfig, channel_gain, pathloss_db, uplink_rate
from iiot_offload.mappo import AgentDims, MappoLearner, gae_advantages, masked_softmax, train
from iiot_offload.metrics import channel_success_rate
from iiot_offload.nn import MLP
from iiot_offload.tasks import ComputeConfig, Task, TaskRanges, local_time, remote_time
from iiot_offload.testing import ChannelBandit

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
REMOTE = ("remote-comm", "remote-nocomm")


def record(report, key, ok, detail, flag=False):
    status = "PASS" if ok else "FAIL"
    if ok and flag:
        status = "FLAG"
    report[key] = (status, detail)
    assert ok, detail


# ------------------------------------------------------------- fixed schemes
def _fixed_scheme_episodes(scheme, seeds=range(5), episodes=200):
    cfg = scheme_env_config(EnvConfig(), scheme)
    env = OffloadEnv(cfg)
    for seed in seeds:
        policy = make_baseline(scheme, random_state=seed).fit(cfg)
        for ep in range(episodes):
            yield run_episode(env, policy, seed * 100_000 + ep)


def test_contention_free_has_zero_collisions(report):
    rates = [
        (m["collision_rate"], sum(r["collisions"] for r in rec))
        for m, rec in _fixed_scheme_episodes("contention-free")
    ]
    ok = all(rate == 0.0 and count == 0 for rate, count in rates)
    worst = max(r for r, _ in rates)
    record(report, 1, ok, f"contention-free collision rate: max {worst} over {len(rates)} episodes, 5 seeds")


def test_local_scheme_never_uses_the_channel(report):
    rows = [(m["success_rate"], m["goodput"]) for m, _ in _fixed_scheme_episodes("local")]
    ok = all(rs == 0.0 and g == 0.0 for rs, g in rows)
    record(report, 2, ok, f"local scheme R_s and goodput: max {max(max(r) for r in rows)} over {len(rows)} episodes")


# ---------------------------------------------------------- scheme comparison
@pytest.fixture(scope="module")
def comparison(tmp_path_factory):
    cfg = load_config(CONFIGS / "acceptance.yaml")
    assert cfg.env.n_devices == 3 and cfg.env.n_channels == 2
    assert cfg.ppo.episodes >= 3000 and len(cfg.seeds) >= 5
    out = os.environ.get("IIOT_OFFLOAD_ACCEPTANCE_OUT") or tmp_path_factory.mktemp("acceptance")
    series = run_experiment(replace(cfg, write_traces=False), out, schemes=list(SCHEMES))
    return {scheme: {m: s.aggregate(m) for m in ("tasks_ok", "success_rate")} for scheme, s in series.items()}


def _final(comparison, scheme, metric):
    mean, lo, hi = comparison[scheme][metric]
    return float(mean[-1]), float(lo[-1]), float(hi[-1])


def _ordered(comparison, metric, better, worse):
    b, w = _final(comparison, better, metric), _final(comparison, worse, metric)
    return b[0] >= w[0], b[1] <= w[2]  # (ordering holds, 95% intervals overlap)


@pytest.mark.slow
def test_scheme_ordering(report, comparison):
    pairs = [("tasks_ok", "combined", other) for other in ("remote-nocomm", "contention-free", "contention-based", "local")]
    pairs += [("success_rate", "remote-comm", "contention-free"), ("success_rate", "contention-free", "contention-based")]
    failed, overlaps = [], []
    for metric, better, worse in pairs:
        ok, overlap = _ordered(comparison, metric, better, worse)
        if not ok:
            failed.append(f"{metric}: {better} < {worse}")
        if overlap:
            overlaps.append(f"{metric}: {better}~{worse}")
    means = ", ".join(
        f"{s} {_final(comparison, s, 'tasks_ok')[0]:.2f}/{_final(comparison, s, 'success_rate')[0]:.3f}" for s in SCHEMES
    )
    detail = f"tasks_ok/R_s means: {means}"
    if failed:
        detail += "; violated: " + "; ".join(failed)
    if overlaps:
        detail += "; CI overlap: " + "; ".join(overlaps)
    record(report, 3, not failed, detail, flag=bool(overlaps))


@pytest.mark.slow
def test_remote_schemes_have_highest_access_rate(report, comparison):
    rs = {s: _final(comparison, s, "success_rate")[0] for s in SCHEMES}
    best_other = max(v for s, v in rs.items() if s not in REMOTE)
    ok = all(rs[s] >= best_other for s in REMOTE)
    record(
        report, 4, ok,
        f"R_s remote-comm {rs['remote-comm']:.3f}, remote-nocomm {rs['remote-nocomm']:.3f}, best other {best_other:.3f}",
    )


# ------------------------------------------------------------------ formulas
def test_formula_values(report):
    link = LinkConfig()
    snr_gain = link.noise_power_w / link.tx_power_w
    d_km = 0.005
    snr_db = 23.0 - (128.1 + 37.6 * math.log10(d_km)) - (-174.0 + 10 * math.log10(10e6))
    chain_rate = 10e6 * math.log2(1 + 10 ** (snr_db / 10))
    f = ComputeConfig()
    checks = [
        ("local 500x2e4 @1GHz", local_time(Task(500, 20_000, 1.0), f), 10.0),
        ("local 100x100 @1GHz", local_time(Task(100, 100, 1.0), f), 0.01),
        ("upload 500b @10Mbps", remote_time(Task(500, 20_000, 1.0), 10e6, 100e9).upload, 0.05),
        ("exec @100GHz", remote_time(Task(500, 20_000, 1.0), 10e6, 100e9).execute, 0.1),
        ("remote total @100GHz", remote_time(Task(500, 20_000, 1.0), 10e6, 100e9).total, 0.15),
        ("exec @50GHz split", remote_time(Task(500, 20_000, 1.0), 10e6, f.bs_share(2)).execute, 0.2),
        ("remote total @50GHz", remote_time(Task(500, 20_000, 1.0), 10e6, f.bs_share(2)).total, 0.25),
        ("pathloss 1 km", pathloss_db(1.0), 128.1),
        ("pathloss 10 m", pathloss_db(0.01), 52.9),
        ("pathloss 100 m", pathloss_db(0.1), 90.5),
        ("rate SNR 1", uplink_rate(snr_gain, link), 10e6),
        ("rate SNR 3", uplink_rate(3 * snr_gain, link), 20e6),
        ("rate 5 m dB chain", uplink_rate(channel_gain(d_km, link), link), chain_rate),
        ("R_s 10/2/25", channel_success_rate(10, 2, 25), 0.2),
        ("R_s 50/2/25", channel_success_rate(50, 2, 25), 1.0),
    ]
    bad = [name for name, got, want in checks if not math.isclose(got, want, rel_tol=1e-6)]
    bad += ["R_s 0/2/25"] if channel_success_rate(0, 2, 25) != 0.0 else []
    record(report, 5, not bad, f"{len(checks) + 1} formula values at 1e-6 relative" + (f"; off: {bad}" if bad else ""))


# ---------------------------------------------------------------------- GAE
def _brute_force_gae(r, v, d, gamma, lam):
    T = len(r)
    delta = [r[t] + gamma * v[t + 1] * (1 - d[t]) - v[t] for t in range(T)]
    out = np.zeros(T)
    for t in range(T):
        w = 1.0
        for k in range(t, T):
            out[t] += w * delta[k]
            if d[k]:
                break
            w *= gamma * lam
    return out


def test_gae_recursion_matches_brute_force(report):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        T = int(rng.integers(1, 26))
        r, v = rng.normal(size=T), rng.normal(size=T + 1)
        d = (rng.random(T) < 0.15).astype(float)
        gamma, lam = rng.uniform(0.8, 1.0), rng.uniform(0.0, 1.0)
        adv, _ = gae_advantages(r, v, d, gamma, lam)
        worst = max(worst, float(np.max(np.abs(adv - _brute_force_gae(r, v, d, gamma, lam)))))
    record(report, 6, worst <= 1e-12, f"max |recursive - brute force| = {worst:.2e} over 1000 trajectories")


# ----------------------------------------------------------------- gradients
def test_gradients_match_finite_differences(report):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        sizes = [int(rng.integers(2, 7)) for _ in range(int(rng.integers(2, 5)))]
        net = MLP(sizes, rng=rng)
        x = rng.normal(size=(int(rng.integers(1, 6)), sizes[0]))
        c = rng.normal(size=(len(x), sizes[-1]))

        def loss():
            return float(np.sum(c * net(x) ** 2))

        out, cache = net.forward_cache(x)
        analytic = net.backward(cache, 2 * c * out)
        for p, g in zip(net.params, analytic):
            num = np.zeros_like(p)
            for idx in np.ndindex(p.shape):
                old = p[idx]
                p[idx] = old + 1e-5
                up = loss()
                p[idx] = old - 1e-5
                down = loss()
                p[idx] = old
                num[idx] = (up - down) / 2e-5
            scale = max(np.linalg.norm(g), np.linalg.norm(num))
            if scale > 0:
                worst = max(worst, float(np.linalg.norm(g - num) / scale))
    record(report, 7, worst <= 1e-4, f"max relative gradient error {worst:.2e} over 20 random nets")


# -------------------------------------------------------------- determinism
def test_runs_are_byte_identical(report, tmp_path):
    cfg = load_config(CONFIGS / "acceptance.yaml")
    cfg = replace(cfg, seeds=(3,), eval_interval=100, eval_episodes=5, ppo=replace(cfg.ppo, episodes=300))
    schemes = ["combined", "contention-based", "contention-free"]
    a, b = tmp_path / "a", tmp_path / "b"
    run_experiment(cfg, a, schemes=schemes)
    run_experiment(cfg, b, schemes=schemes)
    files = sorted(p.relative_to(a) for p in a.rglob("*") if p.suffix in (".csv", ".jsonl", ".yaml"))
    differing = [str(f) for f in files if not filecmp.cmp(a / f, b / f, shallow=False)]
    ok = bool(files) and not differing and any(f.suffix == ".jsonl" for f in files)
    record(report, 8, ok, f"{len(files)} trace/metric files compared" + (f"; differ: {differing}" if differing else ""))


# ---------------------------------------------------------------- bandit
def test_trainer_solves_channel_bandit(report):
    hyper = load_config(CONFIGS / "acceptance.yaml").ppo
    results = []
    for seed in range(5):
        env = ChannelBandit()
        learner = MappoLearner(AgentDims.from_env(env), hyper, seed)
        hit = None
        while learner.grad_steps < 200 and hit is None:
            train(lambda: env, hyper, seed=seed, n_episodes=hyper.episodes_per_update, learner=learner)
            env.reset()
            p = masked_softmax(learner.device_actor(learner.device_inputs(env.device_states())), env.device_masks())[0]
            if p[env.rewarding_action] > 0.95 and p.argmax() == env.rewarding_action:
                hit = learner.grad_steps
        results.append(hit)
    ok = all(h is not None and h <= 200 for h in results)
    record(report, 9, ok, f"gradient steps to p(channel 1) > 0.95 per seed: {results} (limit 200)")


# ----------------------------------------------------------- conservation
def test_task_conservation_fuzz(report):
    rng = np.random.default_rng(99)
    violations = 0
    for episode in range(1000):
        cfg = EnvConfig(
            n_devices=int(rng.integers(1, 6)),
            link=LinkConfig(n_channels=int(rng.integers(1, 4))),
            tasks=TaskRanges(deadline_ms=(1.0, float(rng.uniform(1.0, 8.0)))),
            p_task=float(rng.uniform(0.0, 1.0)),
            queue_capacity=int(rng.integers(1, 6)),
            t_max=int(rng.integers(1, 40)),
            patience_slots=int(rng.integers(0, 5)),
            allow_local=bool(rng.random() < 0.5),
            messages=bool(rng.random() < 0.5),
            prefill=None if rng.random() < 0.5 else 1,
        )
        env = OffloadEnv(cfg)
        env.reset(episode)
        while True:
            led = env.ledger
            if led.arrived != led.completed + led.dropped + env.residual():
                violations += 1
                break
            if env.done:
                break
            dev = [int(rng.choice(np.flatnonzero(m))) for m in env.device_masks()]
            bs = [int(rng.choice(np.flatnonzero(m))) for m in env.bs_masks()]
            env.step_indices(dev, bs)
    record(report, 10, violations == 0, f"arrivals = completions + drops + residual: {violations} violations in 1000 episodes")
