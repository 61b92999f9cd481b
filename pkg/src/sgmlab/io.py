"""Stable text formats: trajectory checkpoints, CSV tables and JSON summaries.

Checkpoint layout (CSV, comma separated)::

    # sgmlab-checkpoint 1
    # N=128
    # L=6.2831853071795862
    # dt=0.001
    # kind=u
    # <other key=value lines, e.g. config_hash>
    t,u_0,...,u_127
    0,0.1,...

Floats are written with ``%.17g`` so that reading back is exact.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .core import DomainError, Trajectory

MAGIC = "# sgmlab-checkpoint 1"


def fmt(x) -> str:
    """Deterministic text form of a scalar."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return "%.17g" % x
    if x is None:
        return ""
    return str(x)


def header_lines(meta: Mapping) -> list:
    return [f"# {k}={fmt(v)}" for k, v in meta.items()]


def write_checkpoint(path, traj: Trajectory, kind: str = "u", meta: Mapping = None) -> None:
    """Write ``traj`` (frames of ``u`` or of ``u_x``) to a CSV checkpoint."""
    if kind not in ("u", "ux"):
        raise DomainError("checkpoint kind must be 'u' or 'ux'")
    head = {"N": traj.N, "L": traj.L, "dt": traj.dt, "n_frames": traj.n_frames,
            "t0": float(traj.times[0]), "kind": kind}
    for k, v in (meta or {}).items():
        head[f"config_{k}" if k in head else k] = v
    buf = io.StringIO()
    buf.write(MAGIC + "\n")
    buf.write("\n".join(header_lines(head)) + "\n")
    buf.write(",".join(["t"] + [f"u_{i}" for i in range(traj.N)]) + "\n")
    for t, row in zip(traj.times, traj.data):
        buf.write(",".join([fmt(float(t))] + [fmt(float(v)) for v in row]) + "\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_checkpoint(path) -> tuple:
    """Return ``(trajectory, header)``; header values are strings."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != MAGIC:
        raise DomainError(f"{path} is not an sgmlab checkpoint")
    meta = {}
    i = 1
    while i < len(lines) and lines[i].startswith("#"):
        key, _, value = lines[i][1:].strip().partition("=")
        meta[key] = value
        i += 1
    body = np.loadtxt(lines[i + 1:], delimiter=",", ndmin=2)
    N = int(meta["N"])
    if body.shape[1] != N + 1:
        raise DomainError(f"checkpoint rows have {body.shape[1] - 1} samples, header says N={N}")
    traj = Trajectory(body[:, 1:], body[:, 0], float(meta["L"]))
    return traj, meta


def write_csv(path, rows: Iterable[Mapping], meta: Mapping, columns: list = None) -> None:
    """CSV table preceded by ``# key=value`` header lines."""
    rows = list(rows)
    columns = columns or (list(rows[0].keys()) if rows else [])
    buf = io.StringIO()
    buf.write("\n".join(header_lines(meta)) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row[c]) for c in columns])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _jsonable(x):
    if isinstance(x, Mapping):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else fmt(x)
    return x


def write_json(path, payload: Mapping) -> None:
    text = json.dumps(_jsonable(payload), sort_keys=True, indent=2, ensure_ascii=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def config_hash(config: Mapping) -> str:
    """SHA-256 of the canonical ``key=value`` listing of a config."""
    text = "\n".join(f"{k}={fmt(config[k])}" for k in sorted(config))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
