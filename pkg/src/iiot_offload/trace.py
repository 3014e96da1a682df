"""Episode trace files.

A trace is UTF-8 JSON Lines. Each episode starts with a header line::

    {"type": "episode", "episode": <int>, "seed": <int>, "scheme": <str>,
     "n_devices": N, "n_channels": M}

followed by one line per slot::

    {"type": "slot", "slot": t,
     "actions": [[offload, channel, uplink], ...],   # one per device
     "uplink": [U_1..U_N], "downlink": [D_1..D_N],
     "channels": [h_1..h_M],      # 0 idle, n winner, N+1 collision
     "chan_state": [S_1..S_N],    # 0 not needed, 1 free, 2 collision
     "rewards": [r_1..r_N], "team_reward": r,
     "arrivals": ["arrived" | "skipped" | "dropped_full", ...],
     "successes": int, "collisions": int, "completed_ok": int,
     "completed_late": int, "dropped_timeout": int, "dropped_full": int,
     "local_started": int, "done": bool}

Keys are sorted and floats use ``repr`` so identical runs give identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Iterator

from .metrics import episode_metrics


def dumps(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def write_trace(path, episodes: Iterable[tuple[dict, list[dict]]]) -> None:
    """Write ``(header, slot_records)`` pairs to ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for header, slots in episodes:
            fh.write(dumps({"type": "episode", **header}) + "\n")
            for rec in slots:
                fh.write(dumps({"type": "slot", **rec}) + "\n")


def read_trace(path) -> Iterator[tuple[dict, list[dict]]]:
    header, slots = None, []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            rec = json.loads(line)
            kind = rec.pop("type", None)
            if kind == "episode":
                if header is not None:
                    yield header, slots
                header, slots = rec, []
            elif kind == "slot":
                if header is None:
                    raise ValueError(f"{path}:{lineno}: slot record before any episode header")
                slots.append(rec)
            else:
                raise ValueError(f"{path}:{lineno}: unknown record type {kind!r}")
    if header is not None:
        yield header, slots


def metrics_from_trace(path) -> list[dict]:
    """Recompute per-episode metrics from a trace file alone."""
    return [
        {"episode": h["episode"], "seed": h["seed"], **episode_metrics(slots, h["n_channels"])}
        for h, slots in read_trace(path)
    ]
