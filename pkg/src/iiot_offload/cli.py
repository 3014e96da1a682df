"""Command line entry point: ``iiot-offload {train,eval,replay}``.

Exit status is 0 on success, 2 for invalid configuration or arguments and 1
for any other failure. Set ``IIOT_OFFLOAD_LOG`` (e.g. ``DEBUG``) to change the
log level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .baselines import SCHEMES, get_scheme, make_baseline, scheme_env_config
from .config import ExperimentConfig, load_config
from .exceptions import ConfigError
from .harness import eval_seeds, evaluate, run_experiment
from .mappo import MappoOffloader
from .metrics import METRICS
from .trace import metrics_from_trace, write_trace

log = logging.getLogger("iiot_offload")


def _seed_list(text: str) -> tuple[int, ...]:
    try:
        seeds = tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("at least one seed is required")
    return seeds


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML experiment config (defaults built in)")
    p.add_argument("--scheme", choices=sorted(SCHEMES), help="scheme to run")
    p.add_argument("--seeds", type=_seed_list, help="comma-separated seeds, e.g. 0,1,2")
    p.add_argument("--out", type=Path, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iiot-offload", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train (learned schemes) or evaluate (fixed schemes) over seeds")
    _common(p)
    p.add_argument("--episodes", type=int, help="training episodes per seed")
    p.add_argument("--jobs", type=int, default=1, help="parallel seed workers")

    p = sub.add_parser("eval", help="greedy evaluation of a scheme or a checkpoint")
    _common(p)
    p.add_argument("--checkpoint", type=Path, help="trained .npz (required for learned schemes)")
    p.add_argument("--episodes", type=int, help="evaluation episodes per seed")

    p = sub.add_parser("replay", help="recompute metrics from a trace file")
    p.add_argument("trace", type=Path)
    return parser


def _experiment(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    return cfg.with_overrides(scheme=args.scheme, seeds=args.seeds)


def _cmd_train(args) -> dict:
    cfg = _experiment(args)
    if args.episodes is not None:
        if args.episodes < 0:
            raise ConfigError("--episodes must be nonnegative")
        cfg = cfg.with_overrides(episodes=args.episodes)
    series = run_experiment(cfg, args.out, n_jobs=args.jobs)[cfg.scheme]
    return {
        "scheme": cfg.scheme,
        "episodes": cfg.ppo.episodes,
        "seeds": list(cfg.seeds),
        "final": {m: float(series.final(m).mean()) for m in METRICS},
    }


def _cmd_eval(args) -> dict:
    cfg = _experiment(args)
    n_eval = cfg.eval_episodes if args.episodes is None else args.episodes
    if n_eval < 1:
        raise ConfigError("--episodes must be positive")
    if args.checkpoint is not None:
        policy = MappoOffloader.load(args.checkpoint)
        scheme = policy.scheme
        env_cfg = policy.env_config_
    else:
        scheme = cfg.scheme
        if get_scheme(scheme).learned:
            raise ConfigError(f"scheme {scheme!r} is learned; pass --checkpoint")
        env_cfg = scheme_env_config(cfg.env, scheme)
    per_seed = {}
    for seed in cfg.seeds:
        if args.checkpoint is None:
            policy = make_baseline(scheme, p_t=cfg.contention_p_t, random_state=[seed, 0]).fit(env_cfg)
        env_seeds = eval_seeds(seed, 0, n_eval)
        metrics, traces = evaluate(policy, env_cfg, env_seeds, keep_traces=True)
        per_seed[seed] = metrics
        if args.out is not None:
            header = {"scheme": scheme, "n_devices": env_cfg.n_devices, "n_channels": env_cfg.n_channels}
            write_trace(
                args.out / f"{scheme}_seed_{seed}.jsonl",
                (({**header, "episode": i, "seed": s}, rec) for i, (s, rec) in enumerate(traces)),
            )
    mean = {m: float(np.mean([r[m] for r in per_seed.values()])) for m in METRICS}
    return {"scheme": scheme, "episodes": n_eval, "per_seed": per_seed, "mean": mean}


def _cmd_replay(args) -> dict:
    if not args.trace.is_file():
        raise ConfigError(f"trace file {args.trace} not found")
    rows = metrics_from_trace(args.trace)
    if not rows:
        raise ConfigError(f"{args.trace} holds no episodes")
    mean = {m: float(np.mean([r[m] for r in rows])) for m in METRICS}
    return {"episodes": rows, "mean": mean}


def main(argv=None) -> int:
    level = os.environ.get("IIOT_OFFLOAD_LOG", "WARNING").upper()
    if not isinstance(logging.getLevelName(level), int):
        level = "WARNING"
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    handler = {"train": _cmd_train, "eval": _cmd_eval, "replay": _cmd_replay}[args.command]
    try:
        result = handler(args)
    except ConfigError as exc:
        print(f"iiot-offload: configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report and exit nonzero
        log.debug("failure", exc_info=True)
        print(f"iiot-offload: error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
