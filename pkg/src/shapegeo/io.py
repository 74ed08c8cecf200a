"""CSV/JSON serialization of grids, trajectories and run manifests.

Floats are written with 17 significant digits so every value round-trips
exactly; JSON output uses the same formatting for reproducible bytes.
"""

from __future__ import annotations

import csv
import json
import math
import os
from importlib import metadata

import numpy as np

from . import config_space as cs

FLOAT_FORMAT = "%.17g"


def version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return FLOAT_FORMAT % float(x)
    return str(x)


def _plain(obj):
    # numpy scalars and arrays to JSON-native values; floats become 17-digit reals
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return _Float17(x) if math.isfinite(x) else None
    return obj


class _Float17(float):
    def __repr__(self):
        s = FLOAT_FORMAT % self
        # keep a float marker so readers do not see an integer
        return s if any(ch in s for ch in ".en") else s + ".0"


class _Encoder(json.JSONEncoder):
    def iterencode(self, o, _one_shot=False):
        # float.__repr__ is bypassed by the C encoder, so force the pure-Python path
        return json.encoder._make_iterencode(
            {}, self.default, json.encoder.py_encode_basestring_ascii, self.indent,
            lambda f: repr(f) if isinstance(f, _Float17) else float.__repr__(f),
            self.key_separator, self.item_separator, self.sort_keys, self.skipkeys, _one_shot)(o, 0)


def dumps(obj) -> str:
    return json.dumps(_plain(obj), cls=_Encoder, indent=2, sort_keys=True) + "\n"


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj))
    return path


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    return path


def manifest_path(path) -> str:
    return os.fspath(path) + ".manifest.json"


def write_manifest(path, command: str, inputs: dict, tolerances: dict = None, extra: dict = None):
    """JSON sidecar next to ``path``; contains no timestamps so reruns are byte-identical."""
    doc = {"file": os.path.basename(os.fspath(path)), "command": command, "version": version(),
           "inputs": inputs, "tolerances": tolerances or {}}
    if extra:
        doc.update(extra)
    return write_json(manifest_path(path), doc)


# ------------------------------------------------------------------ grids


def grid_rows(fields: dict, columns):
    return zip(*(fields[c] for c in columns))


# ----------------------------------------------------------- shape geodesics

TRAJECTORY_HEADER = ("t", "chart", "x", "y", "px", "py", "H_drift")
EVENTS_HEADER = ("kind", "t", "x", "y", "data")


def trajectory_rows(traj, per_step: int = 1, atlas=None):
    """Rows of the chart trajectory; ``per_step`` > 1 adds dense-output samples.

    Dense rows carry H - 1 of the interpolated state when ``atlas`` is given.
    """
    if per_step <= 1:
        drift = traj.drift if traj.drift is not None and len(traj.drift) == len(traj.t) else [math.nan] * len(traj.t)
        for t, c, y, d in zip(traj.t, traj.charts, traj.states, drift):
            yield (float(t), c, *map(float, y), float(d))
        return
    from .geodesic import hamiltonian

    ts, charts, ys = traj.dense(per_step)
    for t, c, y in zip(ts, charts, ys):
        d = hamiltonian(y, atlas[c]) - 1.0 if atlas is not None else math.nan
        yield (float(t), c, *map(float, y), float(d))


def write_trajectory(path, traj, per_step: int = 1, atlas=None):
    return write_csv(path, TRAJECTORY_HEADER, trajectory_rows(traj, per_step, atlas))


def write_events(path, traj):
    rows = ((e.kind, e.t, e.x, e.y, json.dumps(_plain(dict(e.data, chart=e.chart)), sort_keys=True))
            for e in traj.events)
    return write_csv(path, EVENTS_HEADER, rows)


def read_trajectory(path):
    """(t, charts, states) from a chart-trajectory CSV."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if tuple(header[:6]) != TRAJECTORY_HEADER[:6]:
            raise ValueError(f"{path}: expected header starting {','.join(TRAJECTORY_HEADER[:6])}")
        t, charts, states = [], [], []
        for row in r:
            t.append(float(row[0]))
            charts.append(row[1])
            states.append([float(v) for v in row[2:6]])
    return np.array(t), tuple(charts), np.array(states)


# ------------------------------------------------------- physical trajectories

CONFIG_HEADER = tuple(f"{k}{i}{a}" for k in ("q", "p") for i in range(1, 5) for a in "xy") + ("H", "J", "I")


def write_config_trajectory(path, traj: cs.ConfigTrajectory):
    """``t,q1x,...,p4y,H,J,I``; momentum and invariant columns blank when absent."""
    inv = traj.invariants()
    rows = []
    for k, t in enumerate(traj.t):
        q = traj.q[k].ravel().tolist()
        p = traj.p[k].ravel().tolist() if traj.p is not None else [None] * 8
        extra = [None if math.isnan(inv[c][k]) else inv[c][k] for c in ("H", "J", "I")]
        rows.append([float(t)] + q + p + extra)
    return write_csv(path, ("t",) + CONFIG_HEADER, rows)


def config_trajectory_json(traj: cs.ConfigTrajectory):
    inv = traj.invariants()
    doc = {"t": traj.t}
    for i in range(4):
        for j, a in enumerate("xy"):
            doc[f"q{i + 1}{a}"] = traj.q[:, i, j]
            doc[f"p{i + 1}{a}"] = traj.p[:, i, j] if traj.p is not None else None
    doc.update(inv)
    return doc


LIFT_HEADER = ("t",) + tuple(f"q{i}{a}" for i in range(1, 5) for a in "xy") + ("J",)


def write_lift(path, lift: cs.Lift):
    rows = ([float(t)] + lift.q[k].ravel().tolist() + [float(lift.J[k])] for k, t in enumerate(lift.t))
    return write_csv(path, LIFT_HEADER, rows)
