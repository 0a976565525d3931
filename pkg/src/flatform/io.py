"""CSV / JSON writers for plans, traces and run manifests.

Floats are written with 17 significant digits so values survive a text round
trip bit for bit; identical inputs give byte-identical files.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .collision import Region
from .flat_dynamics import (accelerations, control_jerks, positions, velocities,
                            yaw_levels)

TRACK_COLUMNS = ["t", "uav_id", "x", "y", "z", "psi", "vx", "vy", "vz", "psid",
                 "ax", "ay", "az", "psidd", "jx", "jy", "jz", "jpsi",
                 "ref_x", "ref_y", "ref_z"]
PLAN_COLUMNS = TRACK_COLUMNS[:18]
DISTANCE_COLUMNS = ["t", "i", "j", "dist", "region"]
PENALTY_COLUMNS = ["t", "i", "j", "penalty", "weight"]
PHYSICAL_COLUMNS = ["t", "uav_id", "thrust", "roll", "pitch", "yaw", "wx", "wy", "wz",
                    "u2", "u3", "u4"]
VHAT_COLUMNS = ["t", "vhat", "tracking_cost"]


def fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x) + 0.0, ".17g")


def write_csv(path, columns, rows):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(x) for x in row])
    return path


def read_csv(path):
    """Header and float matrix of a numeric CSV written by this module."""
    with Path(path).open() as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _flat_rows(times, states, controls, refs=None):
    p, v, a = positions(states), velocities(states), accelerations(states)
    yaw = yaw_levels(states)
    j = control_jerks(controls)
    jpsi = controls[:, 3 * p.shape[1]:]
    n = p.shape[1]
    for k, t in enumerate(times):
        for i in range(n):
            row = [t, i + 1, *p[k, i], yaw[k, 0, i], *v[k, i], yaw[k, 1, i],
                   *a[k, i], yaw[k, 2, i], *j[k, i], jpsi[k, i]]
            if refs is not None:
                row.extend(refs[k, i])
            yield row


def write_plan(path, times, states, controls):
    return write_csv(path, PLAN_COLUMNS, _flat_rows(times, states, controls))


def write_track(path, trace, stride=1):
    s = slice(None, None, stride)
    return write_csv(path, TRACK_COLUMNS,
                     _flat_rows(trace.times[s], trace.states[s], trace.controls[s],
                                positions(trace.reference[s])))


def _unordered(pairs):
    return [k for k, (i, j) in enumerate(pairs) if i < j]


def write_distances(path, trace, stride=1):
    keep = _unordered(trace.pairs)
    names = [str(r) for r in Region]

    def rows():
        for k in range(0, len(trace.times), stride):
            for q in keep:
                i, j = trace.pairs[q]
                yield [trace.times[k], int(i) + 1, int(j) + 1, trace.distances[k, q],
                       names[trace.regions[k, q]]]
    return write_csv(path, DISTANCE_COLUMNS, rows())


def write_penalties(path, trace, stride=1):
    def rows():
        for k in range(0, len(trace.times), stride):
            for q, (i, j) in enumerate(trace.pairs):
                yield [trace.times[k], int(i) + 1, int(j) + 1, trace.penalties[k, q],
                       trace.weights[k, q]]
    return write_csv(path, PENALTY_COLUMNS, rows())


def write_vhat(path, trace, stride=1):
    s = slice(None, None, stride)
    return write_csv(path, VHAT_COLUMNS,
                     zip(trace.times[s], trace.vhat[s], trace.tracking_cost[s]))


def write_physical(path, trace, stride=1):
    phys = trace.physical
    n = trace.n_uavs
    moments = phys.moments if phys.moments is not None else np.full(phys.body_rates.shape, np.nan)

    def rows():
        for k in range(0, len(trace.times), stride):
            for i in range(n):
                yield [trace.times[k], i + 1, phys.thrust[k, i], phys.roll[k, i],
                       phys.pitch[k, i], phys.yaw[k, i], *phys.body_rates[k, i],
                       *moments[k, i]]
    return write_csv(path, PHYSICAL_COLUMNS, rows())


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def write_json(path, data):
    path = Path(path)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")
    return path


@dataclass
class RunManifest:
    command: str
    config: str
    out_dir: str
    overrides: dict = field(default_factory=dict)
    version: str = ""
    config_hash: str = ""
    files: list = field(default_factory=list)
    status: str = "ok"

    def write(self, path):
        return write_json(path, asdict(self))
