"""Trajectory CSV files and run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from .trajectory import Trajectory

CSV_HEADER = ("t", "player", "action", "prob", "nashconv", "relative_nashconv")

PathLike = Union[str, Path]


def _num(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_trajectory_csv(traj: Trajectory, path: PathLike) -> None:
    """One row per (t, player, action); players are numbered 1 and 2, actions from 0."""
    path = Path(path)
    integer_time = np.issubdtype(traj.t.dtype, np.integer)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for i in range(len(traj)):
                t = int(traj.t[i]) if integer_time else float(traj.t[i])
                nc = _num(traj.nashconv[i])
                rel = _num(traj.relative_nashconv[i])
                for player, probs in ((1, traj.policy1[i]), (2, traj.policy2[i])):
                    for action, p in enumerate(probs):
                        writer.writerow((_num(t), player, action, _num(p), nc, rel))
    except OSError as exc:
        raise OSError(f"cannot write trajectory CSV {path}: {exc.strerror or exc}") from exc


def read_trajectory_csv(path: PathLike) -> Trajectory:
    """Parse a file written by :func:`write_trajectory_csv`."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no samples")
    integer_time = all("." not in r[0] and "e" not in r[0].lower() for r in rows)
    times: list = []
    samples: dict = {}
    for lineno, row in enumerate(rows, start=2):
        if len(row) != len(CSV_HEADER):
            raise ValueError(f"{path}:{lineno}: expected {len(CSV_HEADER)} fields, got {len(row)}")
        t = int(row[0]) if integer_time else float(row[0])
        if t not in samples:
            times.append(t)
            samples[t] = ({}, {}, float(row[4]), float(row[5]))
        samples[t][int(row[1]) - 1][int(row[2])] = float(row[3])
    p1 = np.array([[samples[t][0][a] for a in sorted(samples[t][0])] for t in times])
    p2 = np.array([[samples[t][1][a] for a in sorted(samples[t][1])] for t in times])
    nc = np.array([samples[t][2] for t in times])
    rel = np.array([samples[t][3] for t in times])
    return Trajectory(np.array(times), p1, p2, nc, rel)


def git_blob_hash(data: bytes) -> str:
    """SHA-1 of the data framed as a git blob object."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def write_manifest(path: PathLike, config: dict, outputs: Iterable[PathLike]) -> dict:
    """Record the configuration and a content hash of every output file."""
    path = Path(path)
    files = {}
    for out in sorted(Path(p) for p in outputs):
        files[out.name] = git_blob_hash(out.read_bytes())
    manifest = {"config": config, "outputs": files}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")
    return manifest


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
