"""Experiment orchestration: training, periodic greedy evaluation, aggregation, files.

Output layout under ``out_dir``::

    config.yaml
    <scheme>/seed_<s>.csv             per-seed series (episode + every metric)
    <scheme>/<metric>.csv             episode, seed_<s>..., mean, ci_lo, ci_hi
    <scheme>/traces/seed_<s>.jsonl    final evaluation episodes (see iiot_offload.trace)
    <scheme>/checkpoints/seed_<s>.npz learned schemes only
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from .baselines import get_scheme, make_baseline, scheme_env_config
from .config import ExperimentConfig, dump_config
from .env import EnvConfig, OffloadEnv
from .mappo import MappoOffloader
from .metrics import METRICS, episode_metrics, mean_ci
from .trace import write_trace

log = logging.getLogger(__name__)


def run_episode(env: OffloadEnv, policy, seed, greedy: bool = True) -> tuple[dict, list[dict]]:
    """Play one episode; return its metrics and per-slot trace records."""
    recording = env.record_trace
    env.record_trace = True
    try:
        env.reset(seed)
        while not env.done:
            devices, bs = policy.act(env, greedy=greedy)
            env.step(devices, bs)
        records = list(env.trace)
    finally:
        env.record_trace = recording
    metrics = episode_metrics(records, env.config.n_channels)
    metrics["arrived"] = env.ledger.arrived
    metrics["residual"] = env.residual()
    return metrics, records


def eval_seeds(seed: int, point: int, n: int) -> list[int]:
    """Environment seeds of evaluation point ``point``; shared by every scheme."""
    return [int(s) for s in np.random.default_rng([seed, 10_000 + point]).integers(0, 2**63 - 1, size=n)]


def evaluate(policy, env_config: EnvConfig, seeds: Sequence[int], keep_traces: bool = False):
    """Average metrics of greedy episodes; optionally return their traces."""
    env = OffloadEnv(env_config)
    rows, traces = [], []
    for s in seeds:
        m, rec = run_episode(env, policy, s)
        rows.append(m)
        if keep_traces:
            traces.append((s, rec))
    avg = {k: float(np.mean([r[k] for r in rows])) for k in METRICS}
    return (avg, traces) if keep_traces else avg


@dataclass
class MetricSeries:
    """Evaluation curves of one scheme: ``values[metric]`` has shape ``(n_seeds, n_points)``."""

    scheme: str
    episodes: np.ndarray
    seeds: tuple[int, ...]
    values: dict

    def aggregate(self, metric: str):
        return mean_ci(self.values[metric], axis=0)

    def final(self, metric: str) -> np.ndarray:
        """Per-seed value at the last evaluation point."""
        return self.values[metric][:, -1]


def run_seed(cfg: ExperimentConfig, scheme: str, seed: int, out_dir: Optional[Path] = None) -> list[dict]:
    """Train (when learned) and evaluate ``scheme`` for one seed; returns one row per eval point."""
    env_cfg = scheme_env_config(cfg.env, scheme)
    n_eps = cfg.ppo.episodes
    points = list(range(0, n_eps, cfg.eval_interval)) + [n_eps]
    n_eval = cfg.eval_episodes

    if get_scheme(scheme).learned:
        counter = iter(range(len(points)))

        def eval_fn(learner):
            est.learner_ = learner
            return evaluate(est, env_cfg, eval_seeds(seed, next(counter), n_eval))

        est = MappoOffloader(scheme=scheme, env_config=cfg.env, n_episodes=n_eps, eval_interval=cfg.eval_interval, random_state=seed)
        est.set_params(**_ppo_params(cfg))
        est.fit(eval_fn=eval_fn)
        rows = est.history_
        policy = est
        if out_dir is not None:
            ckpt = out_dir / scheme / "checkpoints" / f"seed_{seed}.npz"
            ckpt.parent.mkdir(parents=True, exist_ok=True)
            est.save(ckpt)
    else:
        rows = [
            {"episode": e, **evaluate(_baseline(cfg, scheme, seed, i, env_cfg), env_cfg, eval_seeds(seed, i, n_eval))}
            for i, e in enumerate(points)
        ]
        policy = _baseline(cfg, scheme, seed, len(points) - 1, env_cfg)

    if out_dir is not None and cfg.write_traces:
        _, traces = evaluate(policy, env_cfg, eval_seeds(seed, len(points) - 1, n_eval), keep_traces=True)
        header = {"scheme": scheme, "n_devices": env_cfg.n_devices, "n_channels": env_cfg.n_channels}
        write_trace(
            out_dir / scheme / "traces" / f"seed_{seed}.jsonl",
            (({**header, "episode": i, "seed": s}, rec) for i, (s, rec) in enumerate(traces)),
        )
    return rows


def _baseline(cfg, scheme, seed, point, env_cfg):
    # one random stream per (seed, eval point) so a trace replays exactly that point
    return make_baseline(scheme, p_t=cfg.contention_p_t, random_state=[seed, point]).fit(env_cfg)


def _ppo_params(cfg: ExperimentConfig) -> dict:
    p = cfg.ppo
    return dict(
        lr=p.lr, minibatch=p.minibatch, gamma=p.gamma, gae_lambda=p.gae_lambda, clip=p.clip,
        vf_coef=p.vf_coef, ent_coef=p.ent_coef, ent_coef_final=p.ent_coef_final, adam_eps=p.adam_eps, epochs=p.epochs,
        episodes_per_update=p.episodes_per_update, hidden=tuple(p.hidden),
        max_grad_norm=p.max_grad_norm, normalize_advantages=p.normalize_advantages,
    )


def _write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def run_experiment(
    cfg: ExperimentConfig,
    out_dir=None,
    schemes: Optional[Sequence[str]] = None,
    n_jobs: int = 1,
) -> dict[str, MetricSeries]:
    """Run every seed of every scheme and write aggregated series.

    With ``out_dir=None`` nothing is written.
    """
    schemes = [cfg.scheme] if schemes is None else list(schemes)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        dump_config(cfg, out / "config.yaml")

    jobs = [(scheme, seed) for scheme in schemes for seed in cfg.seeds]
    results = Parallel(n_jobs=n_jobs)(delayed(run_seed)(cfg, sc, sd, out) for sc, sd in jobs)

    series = {}
    for scheme in schemes:
        per_seed = [rows for (sc, _), rows in zip(jobs, results) if sc == scheme]
        episodes = np.array([r["episode"] for r in per_seed[0]])
        values = {m: np.array([[r[m] for r in rows] for rows in per_seed]) for m in METRICS}
        s = MetricSeries(scheme, episodes, tuple(cfg.seeds), values)
        series[scheme] = s
        if out is None:
            continue
        for seed, rows in zip(cfg.seeds, per_seed):
            _write_csv(
                out / scheme / f"seed_{seed}.csv",
                ["episode", *METRICS],
                ([r["episode"], *(r[m] for m in METRICS)] for r in rows),
            )
        for m in METRICS:
            mean, lo, hi = s.aggregate(m)
            _write_csv(
                out / scheme / f"{m}.csv",
                ["episode", *(f"seed_{sd}" for sd in cfg.seeds), "mean", "ci_lo", "ci_hi"],
                (
                    [int(e), *values[m][:, i].tolist(), mean[i], lo[i], hi[i]]
                    for i, e in enumerate(episodes)
                ),
            )
        log.info("%s: final tasks_ok %.2f, R_s %.3f", scheme, s.final("tasks_ok").mean(), s.final("success_rate").mean())
    return series
