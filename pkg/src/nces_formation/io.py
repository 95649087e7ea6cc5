"""Trace persistence: fixed-schema CSV files and JSON documents, written atomically."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1
TRAJECTORY_COLUMNS = ["step", "time", "id", "x", "y", "heading", "speed"]
ERROR_COLUMNS = ["step", "time", "id", "ex", "ey", "etheta", "resultant"]
COMMAND_COLUMNS = ["step", "time", "id", "a_v", "a_l", "fitness"]
TARGET_COLUMNS = ["step", "time", "x", "y", "heading", "ts"]


class TraceFormatError(ValueError):
    pass


def atomic_write_text(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt(x) -> str:
    """17 significant digits: parses back to the identical double."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def read_csv(path, columns) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TraceFormatError(f"{path}: empty file") from None
        missing = [c for c in columns if c not in header]
        if missing:
            raise TraceFormatError(f"{path}: missing columns {missing}")
        rows = [r for r in reader if r]
    if not rows:
        raise TraceFormatError(f"{path}: no data rows")
    data = np.array(rows, dtype=float)
    return {c: data[:, header.index(c)] for c in columns}


def write_trace(trace, out_dir, summary: dict | None = None) -> dict[str, Path]:
    """Write trajectory, error, command, target and event files for one episode."""
    out = Path(out_dir)
    if len(trace) == 0:
        raise TraceFormatError("empty trace")
    traj, errs, cmds, tgt = [], [], [], []
    for k, t in enumerate(trace.times):
        st, er, cm, fit, alive = trace.states[k], trace.errors[k], trace.commands[k], trace.fitness[k], trace.alive[k]
        for i in np.flatnonzero(alive):
            node = int(i) + 1
            traj.append((k, t, node, *st[i]))
            errs.append((k, t, node, *er[i], float(np.linalg.norm(er[i]))))
            cmds.append((k, t, node, *cm[i], fit[i]))
        tgt.append((k, t, *trace.target[k], trace.ts[k]))
    files = {
        "trajectory": out / "trajectory.csv",
        "error": out / "error.csv",
        "commands": out / "commands.csv",
        "target": out / "target.csv",
        "events": out / "events.json",
    }
    atomic_write_text(files["trajectory"], csv_text(TRAJECTORY_COLUMNS, traj))
    atomic_write_text(files["error"], csv_text(ERROR_COLUMNS, errs))
    atomic_write_text(files["commands"], csv_text(COMMAND_COLUMNS, cmds))
    atomic_write_text(files["target"], csv_text(TARGET_COLUMNS, tgt))
    atomic_write_text(files["events"], json.dumps(trace.events, indent=1))
    if summary is not None:
        files["summary"] = out / "summary.json"
        write_json(files["summary"], summary)
    return files


def write_json(path, doc):
    atomic_write_text(path, json.dumps(doc, indent=1, sort_keys=True, default=_jsonable))


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")
