"""File formats: trajectory CSV, run summaries, and agent state files."""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, TextIO

import numpy as np

from .dynamics import Configuration, Trajectory
from .errors import ConfigError, StiefelSyncError
from .graph import WeightedGraph, graph_from_json

TRAJECTORY_HEADER = ["t", "agent", "col", "row", "value", "V"]


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trajectory_csv(traj: Trajectory, fh: TextIO) -> None:
    """Long format: one row per matrix entry per recorded time."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TRAJECTORY_HEADER)
    for t, c, V in zip(traj.times, traj.states, traj.potential_values):
        ts, Vs = fmt(t), fmt(V)
        S = c.data
        for a in range(c.N):
            for col in range(c.p):
                for row in range(c.n):
                    w.writerow([ts, a, col, row, fmt(S[a, row, col]), Vs])


def read_trajectory_csv(fh: TextIO) -> Trajectory:
    rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigError("empty trajectory file")
    N = 1 + max(int(r["agent"]) for r in rows)
    p = 1 + max(int(r["col"]) for r in rows)
    n = 1 + max(int(r["row"]) for r in rows)
    times: list[float] = []
    values: list[float] = []
    blocks: dict[float, np.ndarray] = {}
    for r in rows:
        t = float(r["t"])
        if t not in blocks:
            blocks[t] = np.zeros((N, n, p))
            times.append(t)
            values.append(float(r["V"]))
        blocks[t][int(r["agent"]), int(r["row"]), int(r["col"])] = float(r["value"])
    return Trajectory(np.array(times), [Configuration(blocks[t]) for t in times], np.array(values))


def dump_json(obj: Any, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n")


def state_to_json(c: Configuration, g: WeightedGraph | None = None) -> dict[str, Any]:
    out: dict[str, Any] = {"n": c.n, "p": c.p, "agents": c.data.tolist()}
    if g is not None:
        out["graph"] = g.to_json()
    return out


def state_from_json(obj: dict[str, Any]) -> tuple[Configuration, WeightedGraph | None]:
    if not isinstance(obj, dict) or "agents" not in obj:
        raise ConfigError("state file must be an object with an 'agents' list", "agents")
    extra = set(obj) - {"n", "p", "agents", "graph"}
    if extra:
        raise ConfigError(f"unknown fields {sorted(extra)}")
    try:
        c = Configuration(np.asarray(obj["agents"], dtype=float))
    except StiefelSyncError as exc:
        raise ConfigError(str(exc), "agents") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"not a stack of n x p matrices: {exc}", "agents") from exc
    for key, val in (("n", c.n), ("p", c.p)):
        if key in obj and obj[key] != val:
            raise ConfigError(f"declared {obj[key]} but agents have {val}", key)
    g = graph_from_json(obj["graph"]) if "graph" in obj else None
    return c, g


def load_state(path: str | Path) -> tuple[Configuration, WeightedGraph | None]:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read state file: {exc}") from exc
    return state_from_json(obj)
